#pragma once

#include <vector>

#include "isolab/numerics.hpp"

namespace isolab {

struct SparseSignal {
  Index dimension = 0;
  std::vector<Index> support;  // ascending, distinct
  std::vector<double> values;  // one per support index
  Vector dense() const;
};

struct CsInstance {
  SparseSignal signal;
  DenseMatrix sensing;  // unscaled W, M x N
  double rho = 1.0;
  Vector observations;  // y = rho W beta + noise
  double noise_sigma = 0.0;
  Seed noise_seed{};
};

enum class SolverStatus { Optimal, MaxIterations, Infeasible };
enum class ConstraintForm { Correlation, Residual };

const char* to_string(SolverStatus s);
const char* to_string(ConstraintForm f);
ConstraintForm constraint_form_from_string(std::string_view s);

struct DantzigOptions {
  ConstraintForm form = ConstraintForm::Correlation;
  int max_iterations = 200;
  double tolerance = 1e-8;  // complementarity (mu) target; an optimal return
                            // additionally certifies feasibility and relative
                            // duality gap to 1e-6
};

struct CsResult {
  Vector estimate;
  double mse = 0.0;  // filled by the caller via ideal_mse
  double constraint_level = 0.0;  // delta
  SolverStatus solver_status = SolverStatus::MaxIterations;
  int iterations = 0;
  double duality_gap = 0.0;          // relative, at termination
  double constraint_violation = 0.0;  // max(0, ||active form|| - delta)
};

// Support without replacement; values gamma_i (1 + |a_i|) with gamma_i
// uniform on {-1, +1} and a_i standard normal, so every magnitude is >= 1.
SparseSignal gen_sparse_signal(Index dimension, Index sparsity, RngStream& rng);

// y = rho * sensing * signal + N(0, noise_sigma^2) noise (no draws consumed
// when noise_sigma = 0).
CsInstance observe(const SparseSignal& signal, const DenseMatrix& sensing,
                   double rho, double noise_sigma, RngStream& rng);

// min ||beta||_1 subject to the correlation constraint
// ||(rho W)^T (y - rho W beta)||_inf <= delta (default) or the residual
// constraint ||rho W beta - y||_inf <= delta.  Solved as the split LP
// beta = u - v via a Mehrotra predictor-corrector interior-point method.
CsResult dantzig_select(const CsInstance& instance, double delta,
                        const DantzigOptions& opts = {});

// Two-stage refinement: one-stage Dantzig estimates carry an O(delta)
// shrinkage bias on every active coordinate, so the classical remedy keeps
// the coordinates whose magnitude clears the per-column noise level
// sigma sqrt(2 ln N) / ||col_j(rho W)||, refits unpenalized least squares on
// them, and prunes once more on the refitted (now unbiased) values.
// Degenerate selections fall back gracefully: an empty selection yields the
// zero estimator, one wider than the observation count keeps the input.
Vector refit_on_support(const CsInstance& instance, const Vector& estimate);

// (||beta - estimate||_2^2 / sum_j min(beta_j^2, sigma^2))^{1/2}
double ideal_mse(const SparseSignal& truth, const Vector& estimate,
                 double noise_sigma);

}  // namespace isolab
