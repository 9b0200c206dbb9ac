#include "isolab/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace isolab {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(Seed seed) noexcept : seed_(seed) {
  // Absorb both key words through a splitmix64 chain; the stream word enters
  // mid-chain (multiplied by an odd constant) so (v, s) and (v', s') chains
  // diverge even when one word matches.
  std::uint64_t x = seed.value;
  state_[0] = splitmix64(x);
  state_[1] = splitmix64(x);
  x ^= seed.stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL;
  state_[2] = splitmix64(x);
  state_[3] = splitmix64(x);
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[3] = 1;
}

std::uint64_t RngStream::next_u64() noexcept {
  // xoshiro256++
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform01() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pm1() noexcept { return 2.0 * uniform01() - 1.0; }

double RngStream::rademacher() noexcept {
  return (next_u64() >> 63) ? 1.0 : -1.0;
}

double RngStream::normal() noexcept {
  // Marsaglia polar, second variate discarded: the draw count per call is
  // data-dependent but the sequence is a pure function of the call order.
  for (;;) {
    const double u = uniform_pm1();
    const double v = uniform_pm1();
    const double s = u * u + v * v;
    if (s >= 1.0 || s == 0.0) continue;
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

double RngStream::normal(double mean, double stddev) noexcept {
  return mean + stddev * normal();
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) throw ValidationError("RngStream::below: bound must be > 0");
  // Rejection below 2^64 mod bound removes modulo bias.
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

std::vector<Index> RngStream::sample_without_replacement(Index n, Index k) {
  if (n < 0 || k < 0 || k > n)
    throw ValidationError(
        "sample_without_replacement: need 0 <= k <= n, got k=" +
        std::to_string(k) + ", n=" + std::to_string(n));
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < k; ++i) {
    const Index j =
        i + static_cast<Index>(below(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)],
              pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

Vector RngStream::unit_sphere(Index dim) {
  if (dim < 1) throw ValidationError("unit_sphere: dimension must be >= 1");
  Vector v(dim);
  for (;;) {
    for (Index i = 0; i < dim; ++i) v[i] = normal();
    const double n = v.norm();
    if (n > 1e-300) return v / n;
  }
}

namespace {

// Crude |lambda|_max estimate used only as the payload of ConvergenceError.
double power_iteration_estimate(const DenseMatrix& w) {
  Vector v = Vector::Constant(w.rows(), 1.0 / std::sqrt(double(w.rows())));
  double est = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector u = w * v;
    const double n = u.norm();
    if (!(n > 1e-300)) return 0.0;
    est = n;
    v = u / n;
  }
  return est;
}

void check_spectral_args(const DenseMatrix& w, double tol, int max_iter,
                         bool require_square, const char* who) {
  if (w.rows() == 0 || w.cols() == 0)
    throw ShapeError(std::string(who) + ": empty matrix");
  if (require_square && w.rows() != w.cols())
    throw ShapeError(std::string(who) + ": matrix must be square, got " +
                     std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
  if (!(tol > 0)) throw ValidationError(std::string(who) + ": tol must be > 0");
  if (max_iter < 1)
    throw ValidationError(std::string(who) + ": max_iter must be >= 1");
  if (!all_finite(w))
    throw ValidationError(std::string(who) + ": matrix has non-finite entries");
}

DenseMatrix smaller_gram(const DenseMatrix& w) {
  if (w.rows() <= w.cols()) return w * w.transpose();
  return w.transpose() * w;
}

}  // namespace

double spectral_radius(const DenseMatrix& w, double tol, int max_iter) {
  check_spectral_args(w, tol, max_iter, /*require_square=*/true,
                      "spectral_radius");
  Eigen::RealSchur<DenseMatrix> schur;
  schur.setMaxIterations(std::max<Eigen::Index>(1, max_iter));
  schur.compute(w, /*computeU=*/false);
  if (schur.info() != Eigen::Success)
    throw ConvergenceError("spectral_radius: QR iteration did not converge",
                           power_iteration_estimate(w));
  // Walk the quasi-triangular factor: 1x1 blocks are real eigenvalues, 2x2
  // blocks hold complex pairs with modulus sqrt(|det|).
  const DenseMatrix& t = schur.matrixT();
  const Index n = t.rows();
  double radius = 0.0;
  Index i = 0;
  while (i < n) {
    if (i + 1 < n && t(i + 1, i) != 0.0) {
      const double det =
          t(i, i) * t(i + 1, i + 1) - t(i, i + 1) * t(i + 1, i);
      radius = std::max(radius, std::sqrt(std::abs(det)));
      i += 2;
    } else {
      radius = std::max(radius, std::abs(t(i, i)));
      i += 1;
    }
  }
  return radius;
}

double largest_singular_value(const DenseMatrix& w, double tol, int max_iter) {
  check_spectral_args(w, tol, max_iter, /*require_square=*/false,
                      "largest_singular_value");
  const DenseMatrix gram = smaller_gram(w);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(gram,
                                                Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw ConvergenceError(
        "largest_singular_value: eigen iteration did not converge",
        std::sqrt(std::max(0.0, power_iteration_estimate(gram))));
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

std::pair<double, double> singular_value_range(const DenseMatrix& w) {
  check_spectral_args(w, kSpectralTol, kSpectralMaxIter,
                      /*require_square=*/false, "singular_value_range");
  const DenseMatrix gram = smaller_gram(w);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(gram,
                                                Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw ConvergenceError(
        "singular_value_range: eigen iteration did not converge",
        std::sqrt(std::max(0.0, power_iteration_estimate(gram))));
  return {std::sqrt(std::max(0.0, es.eigenvalues().minCoeff())),
          std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()))};
}

DenseMatrix ridge_solve(const DenseMatrix& x, const DenseMatrix& y,
                        double lambda) {
  if (x.cols() != y.cols())
    throw ShapeError("ridge_solve: state/target column counts differ (" +
                     std::to_string(x.cols()) + " vs " +
                     std::to_string(y.cols()) + ")");
  if (x.rows() == 0 || x.cols() == 0)
    throw ShapeError("ridge_solve: empty state matrix");
  if (!(lambda >= 0))
    throw ValidationError("ridge_solve: lambda must be >= 0");
  if (!all_finite(x) || !all_finite(y))
    throw ValidationError("ridge_solve: non-finite entries in input");
  DenseMatrix gram = x * x.transpose();
  gram.diagonal().array() += lambda;
  Eigen::LLT<DenseMatrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw SingularityError(
        "ridge_solve: X X^T + lambda I is not positive definite; "
        "use a positive lambda");
  // Solve (X X^T + lambda I) Z = X Y^T, then W_out = Z^T.
  DenseMatrix z = llt.solve(x * y.transpose());
  return z.transpose();
}

bool all_finite(const DenseMatrix& m) { return m.allFinite(); }

}  // namespace isolab
