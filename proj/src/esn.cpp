#include "isolab/esn.hpp"

#include <cmath>

namespace isolab {

Activation activation_from_string(std::string_view s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity") return Activation::Identity;
  throw ValidationError("unknown activation '" + std::string(s) +
                        "' (expected tanh or identity)");
}

const char* to_string(Activation a) {
  return a == Activation::Tanh ? "tanh" : "identity";
}

ReservoirStates run_reservoir(const EsnConfig& cfg, const DenseMatrix& input,
                              const DenseMatrix& w_scaled) {
  const Index n = cfg.n_nodes;
  if (n < 1) throw ValidationError("run_reservoir: n_nodes must be >= 1");
  if (!(cfg.leak >= 0.0 && cfg.leak <= 1.0))
    throw ValidationError("run_reservoir: leak must lie in [0, 1]");
  if (!(cfg.input_scale > 0.0))
    throw ValidationError("run_reservoir: input_scale must be > 0");
  if (w_scaled.rows() != n || w_scaled.cols() != n)
    throw ShapeError("run_reservoir: w_scaled must be n_nodes x n_nodes");
  if (cfg.input_weights.rows() != n)
    throw ShapeError("run_reservoir: input_weights must have n_nodes rows");
  if (input.rows() != cfg.input_weights.cols())
    throw ShapeError("run_reservoir: input rows (" +
                     std::to_string(input.rows()) +
                     ") must match input_weights cols (" +
                     std::to_string(cfg.input_weights.cols()) + ")");
  const Index t_len = input.cols();
  if (cfg.washout < 0 || cfg.washout > t_len)
    throw ValidationError("run_reservoir: washout must lie in [0, T]");
  if (!all_finite(input) || !all_finite(w_scaled) ||
      !all_finite(cfg.input_weights))
    throw ValidationError("run_reservoir: non-finite entries in input");

  ReservoirStates out;
  out.states.resize(n, t_len - cfg.washout);
  Vector x = Vector::Zero(n);
  Vector pre(n);
  const double alpha = cfg.leak;
  for (Index t = 0; t < t_len; ++t) {
    pre.noalias() = w_scaled * x;
    pre.noalias() += cfg.input_scale * (cfg.input_weights * input.col(t));
    pre.array() += cfg.bias;
    if (cfg.activation == Activation::Tanh)
      pre = pre.array().tanh().matrix();
    x = (1.0 - alpha) * x + alpha * pre;
    if (t >= cfg.washout) out.states.col(t - cfg.washout) = x;
  }
  return out;
}

Readout train_readout(const ReservoirStates& states, const DenseMatrix& targets,
                      double lambda) {
  Readout r;
  r.w_out = ridge_solve(states.states, targets, lambda);
  r.lambda_used = lambda;
  return r;
}

std::vector<int> classify_pointwise(const Readout& readout,
                                    const ReservoirStates& states) {
  if (readout.w_out.cols() != states.states.rows())
    throw ShapeError("classify_pointwise: readout/state dimension mismatch");
  const DenseMatrix scores = readout.w_out * states.states;
  std::vector<int> labels(static_cast<std::size_t>(scores.cols()));
  for (Index t = 0; t < scores.cols(); ++t) {
    int best = 0;
    double best_score = scores(0, t);
    for (Index k = 1; k < scores.rows(); ++k) {
      if (scores(k, t) > best_score) {  // strict: ties keep the lowest index
        best_score = scores(k, t);
        best = static_cast<int>(k);
      }
    }
    labels[static_cast<std::size_t>(t)] = best;
  }
  return labels;
}

AccuracyReport accuracy(const std::vector<int>& predicted,
                        const std::vector<int>& truth, int n_classes) {
  if (predicted.size() != truth.size())
    throw ShapeError("accuracy: prediction/truth lengths differ");
  if (n_classes < 1) throw ValidationError("accuracy: n_classes must be >= 1");
  if (truth.empty()) throw ValidationError("accuracy: empty input");
  std::vector<std::size_t> total(static_cast<std::size_t>(n_classes), 0);
  std::vector<std::size_t> hit(static_cast<std::size_t>(n_classes), 0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    if (t < 0 || t >= n_classes)
      throw ValidationError("accuracy: truth label out of range");
    ++total[static_cast<std::size_t>(t)];
    if (predicted[i] == t) {
      ++hit[static_cast<std::size_t>(t)];
      ++hits;
    }
  }
  AccuracyReport rep;
  rep.overall = 100.0 * double(hits) / double(truth.size());
  rep.per_class.resize(static_cast<std::size_t>(n_classes));
  for (int k = 0; k < n_classes; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    if (total[kk] == 0)
      rep.per_class[kk] = std::nullopt;
    else
      rep.per_class[kk] = 100.0 * double(hit[kk]) / double(total[kk]);
  }
  return rep;
}

SeparationResult separation_ratio(const std::vector<ReservoirStates>& sequences,
                                  int n_classes) {
  if (n_classes < 1)
    throw ValidationError("separation_ratio: n_classes must be >= 1");
  if (sequences.empty())
    throw ValidationError("separation_ratio: no sequences");
  const Index n = sequences.front().states.rows();
  const Index t_len = sequences.front().states.cols();
  std::vector<std::vector<std::size_t>> members(
      static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& seq = sequences[i];
    if (seq.states.rows() != n || seq.states.cols() != t_len)
      throw ShapeError("separation_ratio: sequences must share dimensions");
    if (seq.labels.empty())
      throw ValidationError("separation_ratio: sequence " + std::to_string(i) +
                            " has no label");
    const int label = seq.labels.front();
    if (label < 0 || label >= n_classes)
      throw ValidationError("separation_ratio: label out of range");
    members[static_cast<std::size_t>(label)].push_back(i);
  }
  for (int k = 0; k < n_classes; ++k)
    if (members[static_cast<std::size_t>(k)].empty())
      throw ValidationError("separation_ratio: class " + std::to_string(k) +
                            " has no sequences");

  SeparationResult res;
  res.per_step.resize(static_cast<std::size_t>(t_len));
  DenseMatrix means(n, n_classes);
  const double k_sq = double(n_classes) * double(n_classes);
  double acc = 0.0;
  for (Index t = 0; t < t_len; ++t) {
    for (int k = 0; k < n_classes; ++k) {
      const auto& idx = members[static_cast<std::size_t>(k)];
      Vector m = Vector::Zero(n);
      for (std::size_t i : idx) m += sequences[i].states.col(t);
      means.col(k) = m / double(idx.size());
    }
    // d(t): literal double sum over ordered class pairs, zero diagonal
    // included, normalized by K^2.
    double d = 0.0;
    for (int k = 0; k < n_classes; ++k)
      for (int j = 0; j < n_classes; ++j)
        d += (means.col(k) - means.col(j)).norm();
    d /= k_sq;
    // v(t): mean over classes of the mean member distance to the class mean.
    double v = 0.0;
    for (int k = 0; k < n_classes; ++k) {
      const auto& idx = members[static_cast<std::size_t>(k)];
      double within = 0.0;
      for (std::size_t i : idx)
        within += (sequences[i].states.col(t) - means.col(k)).norm();
      v += within / double(idx.size());
    }
    v /= double(n_classes);
    const double sep = d / (1.0 + v);
    res.per_step[static_cast<std::size_t>(t)] = sep;
    acc += sep;
  }
  res.mean = acc / double(t_len);
  return res;
}

}  // namespace isolab
