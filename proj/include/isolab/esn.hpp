#pragma once

#include <optional>
#include <vector>

#include "isolab/ensembles.hpp"
#include "isolab/numerics.hpp"

namespace isolab {

enum class Activation { Tanh, Identity };

Activation activation_from_string(std::string_view s);
const char* to_string(Activation a);

struct EsnConfig {
  Index n_nodes = 0;            // N
  double leak = 1.0;            // alpha in [0, 1]
  double input_scale = 1.0;     // beta
  double bias = 0.0;            // gamma, added to every component
  Activation activation = Activation::Tanh;
  WeightSpec weight_spec{};     // recipe for W (square, rows = n_nodes)
  DenseMatrix input_weights;    // W_in, N x L
  std::optional<double> ridge_lambda;  // absent = relative default
  int washout = 0;
};

struct ReservoirStates {
  DenseMatrix states;       // N x T
  std::vector<int> labels;  // per-column class index; may be empty (unlabeled)
};

struct Readout {
  DenseMatrix w_out;  // K x N
  double lambda_used = 0.0;
};

struct AccuracyReport {
  double overall = 0.0;                          // percent
  std::vector<std::optional<double>> per_class;  // percent; nullopt = empty class
};

struct SeparationResult {
  std::vector<double> per_step;
  double mean = 0.0;
};

// Leaky reservoir recurrence from the zero state:
//   X(:,t+1) = (1-alpha) X(:,t) + alpha f(beta W_in A(:,t) + W_s X(:,t) + gamma)
// where w_scaled = rho W.  Returns states X(:,1..T) with the first `washout`
// columns dropped; labels left empty.
ReservoirStates run_reservoir(const EsnConfig& cfg, const DenseMatrix& input,
                              const DenseMatrix& w_scaled);

// Ridge readout on concatenated states (delegates to ridge_solve).
Readout train_readout(const ReservoirStates& states, const DenseMatrix& targets,
                      double lambda);

// Per-column argmax of w_out X; ties go to the lowest class index.
std::vector<int> classify_pointwise(const Readout& readout,
                                    const ReservoirStates& states);

AccuracyReport accuracy(const std::vector<int>& predicted,
                        const std::vector<int>& truth, int n_classes);

// Separation ratio Sep(t) = d(t) / (1 + v(t)) over per-sequence state
// matrices (all sharing N x T); d is the 1/K^2-normalized double sum of
// class-mean distances (zero diagonal terms included), v the K-class mean of
// within-class mean distances to the class mean.
SeparationResult separation_ratio(const std::vector<ReservoirStates>& sequences,
                                  int n_classes);

}  // namespace isolab
