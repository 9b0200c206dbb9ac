#include "isolab/isometry.hpp"

#include <cmath>
#include <limits>

namespace isolab {

namespace {

void check_common(const DenseMatrix& w, double rho, int samples,
                  const char* who) {
  if (w.rows() == 0 || w.cols() == 0)
    throw ShapeError(std::string(who) + ": empty matrix");
  if (!all_finite(w))
    throw ValidationError(std::string(who) + ": non-finite entries");
  if (!(rho > 0) || !std::isfinite(rho))
    throw ValidationError(std::string(who) + ": rho must be finite and > 0");
  if (samples < 1)
    throw ValidationError(std::string(who) + ": samples must be >= 1");
}

}  // namespace

IsometryInterval estimate_nii(const DenseMatrix& w, double rho, int samples,
                              RngStream& rng) {
  check_common(w, rho, samples, "estimate_nii");
  const Index n = w.cols();
  Vector x(n);
  Vector y(w.rows());
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int s = 0; s < samples; ++s) {
    double xn = 0.0;
    do {
      for (Index i = 0; i < n; ++i) x[i] = rng.uniform_pm1();
      xn = x.norm();
    } while (xn == 0.0);
    y.noalias() = w * x;
    const double r = y.norm() / xn;
    if (r < lo) lo = r;
    if (r > hi) hi = r;
  }
  return {rho * lo, rho * hi, samples, std::nullopt};
}

IsometryInterval estimate_rii(const DenseMatrix& w, double rho, Index sparsity,
                              int samples, RngStream& rng) {
  check_common(w, rho, samples, "estimate_rii");
  if (sparsity < 1)
    throw ValidationError("estimate_rii: sparsity must be >= 1");
  if (sparsity > w.cols())
    throw ShapeError("estimate_rii: sparsity exceeds column count (" +
                     std::to_string(sparsity) + " > " +
                     std::to_string(w.cols()) + ")");
  Vector vals(sparsity);
  Vector x(w.cols());
  Vector y(w.rows());
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto support = rng.sample_without_replacement(w.cols(), sparsity);
    double xn = 0.0;
    do {
      for (Index i = 0; i < sparsity; ++i) vals[i] = rng.uniform_pm1();
      // Norm of the embedded sparse vector, not of the short value list:
      // the two can differ in the last ulp, and the ratio must come out as
      // exactly 1 when w is an isometry.
      x.setZero();
      for (Index i = 0; i < sparsity; ++i)
        x[support[static_cast<std::size_t>(i)]] = vals[i];
      xn = x.norm();
    } while (xn == 0.0);
    y.setZero();
    for (Index i = 0; i < sparsity; ++i)
      y.noalias() += vals[i] * w.col(support[static_cast<std::size_t>(i)]);
    const double r = y.norm() / xn;
    if (r < lo) lo = r;
    if (r > hi) hi = r;
  }
  return {rho * lo, rho * hi, samples, sparsity};
}

IsometryInterval singular_interval(const DenseMatrix& w, double rho) {
  check_common(w, rho, 1, "singular_interval");
  const auto [smin, smax] = singular_value_range(w);
  return {rho * smin, rho * smax, 0, std::nullopt};
}

}  // namespace isolab
