#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "isolab/errors.hpp"

namespace isolab {

using Index = Eigen::Index;
using DenseMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Identifies a reproducible random stream.  Two seeds are equivalent iff both
// fields match; harness code derives per-run streams by varying `stream`.
struct Seed {
  std::uint64_t value = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const Seed&, const Seed&) = default;
};

// Deterministic generator (xoshiro256++ seeded via splitmix64 over both seed
// fields).  All distributions are implemented on top of next_u64 so results
// are identical across platforms and standard libraries.
class RngStream {
 public:
  explicit RngStream(Seed seed) noexcept;

  Seed seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() noexcept;
  // Uniform on [-1, 1).
  double uniform_pm1() noexcept;
  // Uniform on {-1, +1}.
  double rademacher() noexcept;
  // Standard normal via the Marsaglia polar method.  Pairs are not cached, so
  // the draw sequence is a pure function of the call sequence.
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept;

  // Uniform integer in [0, bound), bound > 0, rejection sampled (no modulo
  // bias).
  std::uint64_t below(std::uint64_t bound);

  // k distinct indices from [0, n), ascending.  Partial Fisher-Yates.
  std::vector<Index> sample_without_replacement(Index n, Index k);

  // Uniform direction on the unit sphere in R^dim (normalized normals).
  Vector unit_sphere(Index dim);

 private:
  Seed seed_;
  std::array<std::uint64_t, 4> state_;
};

inline constexpr double kDegenerateThreshold = 1e-12;
inline constexpr double kSpectralTol = 1e-10;
inline constexpr int kSpectralMaxIter = 10000;

// Spectral radius (largest eigenvalue modulus) via a real Schur
// decomposition: Hessenberg reduction followed by implicitly shifted QR.
// The QR phase converges to machine precision, which is below any tol >=
// 1e-15; max_iter bounds the total QR sweeps.  Throws ConvergenceError
// (carrying a power-iteration estimate) on non-convergence and ShapeError
// for non-square or empty input.
double spectral_radius(const DenseMatrix& w, double tol = kSpectralTol,
                       int max_iter = kSpectralMaxIter);

// Largest singular value from the eigendecomposition of the smaller Gram
// matrix (same precision note as spectral_radius).  Accepts rectangular
// input; throws ShapeError when empty.
double largest_singular_value(const DenseMatrix& w, double tol = kSpectralTol,
                              int max_iter = kSpectralMaxIter);

// Smallest and largest singular values (full decomposition of the smaller
// Gram matrix).  Used for exact-interval diagnostics.
std::pair<double, double> singular_value_range(const DenseMatrix& w);

// Solves W_out = Y X^T (X X^T + lambda I)^{-1} by Cholesky.  X is n x T
// (one state per column), Y is k x T.  lambda must be >= 0; a non-positive-
// definite system raises SingularityError suggesting a larger lambda.
DenseMatrix ridge_solve(const DenseMatrix& x, const DenseMatrix& y,
                        double lambda);

// True iff every entry of m is finite.
bool all_finite(const DenseMatrix& m);

}  // namespace isolab
