#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "isolab/numerics.hpp"

using namespace isolab;

namespace {

DenseMatrix random_mat(Index r, Index c, std::uint64_t seed) {
  RngStream rng({seed, 0});
  DenseMatrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rng.uniform_pm1();
  return m;
}

}  // namespace

TEST_CASE("rng streams are deterministic and distinct") {
  RngStream a({5, 1}), b({5, 1}), c({5, 2}), d({6, 1});
  bool same = true, differs_stream = false, differs_value = false;
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t ra = a.next_u64();
    same = same && ra == b.next_u64();
    differs_stream = differs_stream || ra != c.next_u64();
    differs_value = differs_value || ra != d.next_u64();
  }
  CHECK(same);
  CHECK(differs_stream);
  CHECK(differs_value);
}

TEST_CASE("rng scalar ranges") {
  RngStream rng({7, 0});
  for (int i = 0; i < 2000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double p = rng.uniform_pm1();
    CHECK(p >= -1.0);
    CHECK(p <= 1.0);
    const double r = rng.rademacher();
    CHECK((r == 1.0 || r == -1.0));
  }
}

TEST_CASE("rng normal draws have plausible spread") {
  RngStream rng({8, 0});
  double sum = 0.0, ss = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    ss += x * x;
  }
  const double mean = sum / n;
  const double var = ss / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.0).epsilon(0.02));

  const double shifted = rng.normal(3.0, 0.5);
  CHECK(std::isfinite(shifted));
}

TEST_CASE("rng below() covers the whole range and respects the bound") {
  RngStream rng({9, 0});
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 3000; ++i) {
    const std::uint64_t v = rng.below(3);
    CHECK(v < 3);
    seen.insert(v);
  }
  CHECK(seen.size() == 3);
}

TEST_CASE("sample_without_replacement returns sorted distinct indices") {
  RngStream rng({10, 0});
  const auto idx = rng.sample_without_replacement(50, 12);
  REQUIRE(idx.size() == 12);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  for (std::size_t i = 1; i < idx.size(); ++i) CHECK(idx[i] != idx[i - 1]);
  CHECK(idx.front() >= 0);
  CHECK(idx.back() < 50);

  const auto all = rng.sample_without_replacement(6, 6);
  CHECK(all == std::vector<Index>{0, 1, 2, 3, 4, 5});
  CHECK_THROWS_AS((void)rng.sample_without_replacement(4, 5), ValidationError);
}

TEST_CASE("unit_sphere is normalized in any dimension") {
  RngStream rng({11, 0});
  for (Index d : {Index(1), Index(2), Index(10), Index(200)}) {
    const Vector v = rng.unit_sphere(d);
    REQUIRE(v.size() == d);
    CHECK(std::abs(v.norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("spectral radius on known matrices") {
  CHECK(spectral_radius(DenseMatrix::Identity(5, 5)) ==
        doctest::Approx(1.0).epsilon(1e-12));

  DenseMatrix d = DenseMatrix::Zero(3, 3);
  d(0, 0) = 0.2;
  d(1, 1) = -0.7;
  d(2, 2) = 0.3;
  CHECK(spectral_radius(d) == doctest::Approx(0.7).epsilon(1e-12));

  // rotation: complex pair on the unit circle
  DenseMatrix rot(2, 2);
  const double th = 0.83;
  rot << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
  CHECK(spectral_radius(rot) == doctest::Approx(1.0).epsilon(1e-10));

  DenseMatrix nil = DenseMatrix::Zero(2, 2);
  nil(0, 1) = 1.0;
  CHECK(spectral_radius(nil) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("spectral radius input validation") {
  CHECK_THROWS_AS((void)spectral_radius(DenseMatrix()), ShapeError);
  CHECK_THROWS_AS((void)spectral_radius(random_mat(3, 4, 2)), ShapeError);
  DenseMatrix bad = DenseMatrix::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)spectral_radius(bad), ValidationError);
  const DenseMatrix ok = random_mat(3, 3, 3);
  CHECK_THROWS_AS((void)spectral_radius(ok, 0.0), ValidationError);
  CHECK_THROWS_AS((void)spectral_radius(ok, 1e-10, 0), ValidationError);
}

TEST_CASE("largest singular value agrees between a matrix and its transpose") {
  const DenseMatrix m = random_mat(4, 9, 4);
  const double a = largest_singular_value(m);
  const double b = largest_singular_value(DenseMatrix(m.transpose()));
  // Both paths reduce to the same 4x4 Gram matrix, but assembled in a
  // different product order, so agreement is to rounding, not bitwise.
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  CHECK(a > 0.0);
}

TEST_CASE("singular value range brackets and orders correctly") {
  DenseMatrix d = DenseMatrix::Zero(3, 3);
  d(0, 0) = 0.5;
  d(1, 1) = -2.0;
  d(2, 2) = 1.0;
  const auto [lo, hi] = singular_value_range(d);
  CHECK(lo == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(hi == doctest::Approx(2.0).epsilon(1e-12));

  const auto [zlo, zhi] = singular_value_range(DenseMatrix::Zero(4, 2));
  CHECK(zlo == 0.0);
  CHECK(zhi == 0.0);

  const DenseMatrix m = random_mat(5, 7, 5);
  const auto [a, b] = singular_value_range(m);
  CHECK(a <= b);
  CHECK(b == doctest::Approx(largest_singular_value(m)).epsilon(1e-12));
}

TEST_CASE("ridge_solve matches hand cases and validates inputs") {
  const DenseMatrix y = random_mat(2, 6, 6);
  const DenseMatrix w = ridge_solve(DenseMatrix::Identity(6, 6), y, 0.0);
  CHECK((w - y).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK_THROWS_AS((void)ridge_solve(random_mat(3, 5, 7), random_mat(2, 6, 8), 0.1),
                  ShapeError);
  CHECK_THROWS_AS((void)ridge_solve(random_mat(3, 5, 7), random_mat(2, 5, 8), -1.0),
                  ValidationError);
  // rank-deficient states with lambda 0 cannot factor
  CHECK_THROWS_AS(
      (void)ridge_solve(DenseMatrix::Zero(3, 5), random_mat(2, 5, 9), 0.0),
      SingularityError);
}

TEST_CASE("ridge_solve shrinks with growing lambda") {
  const DenseMatrix x = random_mat(4, 12, 10);
  const DenseMatrix y = random_mat(2, 12, 11);
  double prev = 1e300;
  for (double lambda : {1e-4, 1e-2, 1.0, 100.0}) {
    const double n = ridge_solve(x, y, lambda).norm();
    CHECK(n < prev);
    prev = n;
  }
}

TEST_CASE("all_finite flags non-finite entries") {
  DenseMatrix m = DenseMatrix::Zero(2, 2);
  CHECK(all_finite(m));
  m(1, 1) = std::numeric_limits<double>::infinity();
  CHECK(!all_finite(m));
}
