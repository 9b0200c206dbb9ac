#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>

#include "isolab/oracles.hpp"

using namespace isolab;

TEST_CASE("poly_roots solves factored polynomials") {
  // (z - 1)(z - 2)(z - 3) = z^3 - 6z^2 + 11z - 6
  const auto roots = oracles::poly_roots({-6.0, 11.0, -6.0});
  REQUIRE(roots.size() == 3);
  std::vector<double> re;
  for (const auto& r : roots) {
    CHECK(std::abs(r.imag()) <= 1e-8);
    re.push_back(r.real());
  }
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(re[1] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(re[2] == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("poly_roots finds complex pairs") {
  // z^2 + 1
  const auto roots = oracles::poly_roots({0.0, 1.0});
  REQUIRE(roots.size() == 2);
  for (const auto& r : roots) {
    CHECK(std::abs(r.real()) <= 1e-9);
    CHECK(std::abs(std::abs(r.imag()) - 1.0) <= 1e-9);
  }
}

TEST_CASE("char_poly reproduces known coefficients") {
  // diag(1, 2): z^2 - 3z + 2
  DenseMatrix d = DenseMatrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 2.0;
  const auto c = oracles::char_poly(d);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == doctest::Approx(-3.0).epsilon(1e-13));
  CHECK(c[1] == doctest::Approx(2.0).epsilon(1e-13));

  CHECK_THROWS_AS((void)oracles::char_poly(DenseMatrix::Identity(7, 7)),
                  ValidationError);
}

TEST_CASE("spectral_radius_ref on hand matrices") {
  DenseMatrix m(2, 2);
  m << 0.0, 1.0, -1.0, 0.0;  // eigenvalues +-i
  CHECK(oracles::spectral_radius_ref(m) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("largest_singular_value_ref on a diagonal rectangle") {
  DenseMatrix m = DenseMatrix::Zero(2, 4);
  m(0, 0) = 3.0;
  m(1, 1) = -5.0;
  CHECK(oracles::largest_singular_value_ref(m) ==
        doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("inverse_ref inverts small matrices") {
  RngStream rng({42, 0});
  for (Index n : {Index(1), Index(2), Index(3), Index(4)}) {
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m(i, j) = rng.uniform_pm1();
    m.diagonal().array() += 2.0;  // keep it comfortably nonsingular
    const DenseMatrix inv = oracles::inverse_ref(m);
    const double err =
        (m * inv - DenseMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-10);
  }
  CHECK_THROWS_AS((void)oracles::inverse_ref(DenseMatrix::Zero(3, 3)),
                  SingularityError);
  CHECK_THROWS_AS((void)oracles::inverse_ref(DenseMatrix::Identity(5, 5)),
                  ValidationError);
}

TEST_CASE("ls_on_support solves the restricted normal equations") {
  RngStream rng({43, 0});
  DenseMatrix a(6, 10);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 10; ++j) a(i, j) = rng.uniform_pm1();
  Vector truth = Vector::Zero(10);
  truth[2] = 1.5;
  truth[7] = -0.75;
  const Vector y = a * truth;
  const Vector coef = oracles::ls_on_support(a, y, {2, 7});
  CHECK(coef[0] == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(coef[1] == doctest::Approx(-0.75).epsilon(1e-9));
}

TEST_CASE("best_support_ref recovers a planted support") {
  RngStream rng({44, 0});
  DenseMatrix a(8, 14);
  for (Index i = 0; i < 8; ++i)
    for (Index j = 0; j < 14; ++j) a(i, j) = rng.normal();
  Vector truth = Vector::Zero(14);
  truth[1] = 2.0;
  truth[5] = -1.0;
  truth[11] = 0.5;
  const Vector y = a * truth;
  CHECK(oracles::best_support_ref(a, y, 3) == std::vector<Index>{1, 5, 11});
  CHECK_THROWS_AS((void)oracles::best_support_ref(a, y, 5), ValidationError);
}
