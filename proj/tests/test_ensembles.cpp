#include "doctest.h"

#include <cmath>

#include "isolab/ensembles.hpp"
#include "isolab/isometry.hpp"

using namespace isolab;

namespace {

WeightSpec spec_of(GenTag tag, Index rows, Index cols, std::uint64_t seed,
                   double fraction = 1.0) {
  WeightSpec s;
  s.gen = {tag, fraction};
  s.rows = rows;
  s.cols = cols;
  s.seed = {seed, 0};
  return s;
}

}  // namespace

TEST_CASE("generate is deterministic per spec and seed-sensitive") {
  const WeightSpec s = spec_of(GenTag::M2, 12, 9, 21);
  const DenseMatrix a = generate(s);
  const DenseMatrix b = generate(s);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

  WeightSpec other = s;
  other.seed = {22, 0};
  CHECK((a - generate(other)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("M1 columns are unit vectors for any seed") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DenseMatrix w = generate(spec_of(GenTag::M1, 30, 7, seed));
    for (Index j = 0; j < w.cols(); ++j)
      CHECK(std::abs(w.col(j).norm() - 1.0) <= 1e-12);
  }
}

TEST_CASE("M3 entries stay inside [-1, 1]") {
  const DenseMatrix w = generate(spec_of(GenTag::M3, 20, 20, 23));
  CHECK(w.maxCoeff() <= 1.0);
  CHECK(w.minCoeff() >= -1.0);
  CHECK(w.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("M4 and M5 hit the exact rounded nonzero count") {
  // 0.37 * 10 * 13 = 48.1 -> 48
  const DenseMatrix w4 = generate(spec_of(GenTag::M4, 10, 13, 24, 0.37));
  CHECK(Index((w4.array() != 0.0).count()) == 48);

  const DenseMatrix w5 = generate(spec_of(GenTag::M5, 40, 50, 25, 0.2));
  CHECK(Index((w5.array() != 0.0).count()) == 400);

  // seeds move the pattern, not the count
  const DenseMatrix w5b = generate(spec_of(GenTag::M5, 40, 50, 26, 0.2));
  CHECK(Index((w5b.array() != 0.0).count()) == 400);
  CHECK((w5 - w5b).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("M5 nonzero values carry the 1/rows variance scale") {
  const Index rows = 100;
  const DenseMatrix w = generate(spec_of(GenTag::M5, rows, 200, 27, 0.5));
  double ss = 0.0;
  Index n = 0;
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j)
      if (w(i, j) != 0.0) {
        ss += w(i, j) * w(i, j);
        ++n;
      }
  REQUIRE(n == 10000);
  const double var = ss / double(n);
  CHECK(var == doctest::Approx(1.0 / double(rows)).epsilon(0.1));
}

TEST_CASE("identity debug generator requires square shapes") {
  const DenseMatrix w = generate(spec_of(GenTag::Identity, 6, 6, 28));
  CHECK((w - DenseMatrix::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS((void)generate(spec_of(GenTag::Identity, 6, 5, 28)),
                  ValidationError);
}

TEST_CASE("spec validation names violated invariants") {
  CHECK_THROWS_AS((void)generate(spec_of(GenTag::M1, 0, 5, 1)), ValidationError);
  CHECK_THROWS_AS((void)generate(spec_of(GenTag::M4, 5, 5, 1, 0.0)),
                  ValidationError);
  CHECK_THROWS_AS((void)generate(spec_of(GenTag::M4, 5, 5, 1, 1.5)),
                  ValidationError);
  WeightSpec bad = spec_of(GenTag::M2, 5, 5, 1);
  bad.scale.nii_samples = 0;
  CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("tag names round-trip") {
  for (GenTag t : {GenTag::M1, GenTag::M2, GenTag::M3, GenTag::M4, GenTag::M5,
                   GenTag::Identity})
    CHECK(gen_tag_from_string(to_string(t)) == t);
  for (ScaleTag t :
       {ScaleTag::R1, ScaleTag::R2, ScaleTag::R3, ScaleTag::R4, ScaleTag::R5})
    CHECK(scale_tag_from_string(to_string(t)) == t);
  CHECK_THROWS_AS((void)gen_tag_from_string("M9"), ValidationError);
  CHECK_THROWS_AS((void)scale_tag_from_string("R0"), ValidationError);
}

TEST_CASE("R2 equals 2/(a+b) of the unscaled interval on a shared stream") {
  const DenseMatrix w = generate(spec_of(GenTag::M3, 15, 15, 29));
  RngStream probe({31, 4});
  const auto iv = estimate_nii(w, 1.0, 250, probe);
  RngStream rng({31, 4});
  const double rho = scale_factor({ScaleTag::R2, 250}, w, rng);
  CHECK(rho == 2.0 / (iv.lower + iv.upper));
}

TEST_CASE("R3 and R4 demand square matrices and relate by exactly 0.9") {
  const DenseMatrix rect = generate(spec_of(GenTag::M2, 6, 9, 30));
  RngStream rng({32, 0});
  CHECK_THROWS_AS((void)scale_factor({ScaleTag::R3, 100}, rect, rng),
                  ShapeError);
  CHECK_THROWS_AS((void)scale_factor({ScaleTag::R4, 100}, rect, rng),
                  ShapeError);

  const DenseMatrix sq = generate(spec_of(GenTag::M3, 11, 11, 33));
  const double r3 = scale_factor({ScaleTag::R3, 100}, sq, rng);
  const double r4 = scale_factor({ScaleTag::R4, 100}, sq, rng);
  CHECK(r4 == 0.9 * r3);
  CHECK(spectral_radius(r3 * sq) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("degenerate matrices are rejected by the scale rules") {
  const DenseMatrix zero = DenseMatrix::Zero(5, 5);
  RngStream rng({34, 0});
  CHECK_THROWS_AS((void)scale_factor({ScaleTag::R3, 100}, zero, rng),
                  DegenerateError);
  CHECK_THROWS_AS((void)scale_factor({ScaleTag::R5, 100}, zero, rng),
                  DegenerateError);
  CHECK_THROWS_AS((void)scale_factor({ScaleTag::R2, 100}, zero, rng),
                  DegenerateError);
}

TEST_CASE("R5 scaling pins the upper interval endpoint near 1") {
  const DenseMatrix w = generate(spec_of(GenTag::M3, 25, 25, 35));
  RngStream rng({36, 0});
  const double rho = scale_factor({ScaleTag::R5, 100}, w, rng);
  CHECK(largest_singular_value(rho * w) == doctest::Approx(1.0).epsilon(1e-9));
  RngStream probe({37, 0});
  const auto iv = estimate_nii(w, rho, 400, probe);
  CHECK(iv.upper <= 1.0 + 1e-9);
}

TEST_CASE("realize bundles generation and scaling") {
  WeightSpec s = spec_of(GenTag::M3, 10, 10, 38);
  s.scale = {ScaleTag::R2, 150};
  RngStream r1({39, 0});
  const RealizedWeights rw = realize(s, r1);
  RngStream r2({39, 0});
  const DenseMatrix w = generate(s);
  const double rho = scale_factor(s.scale, w, r2);
  CHECK((rw.w - w).cwiseAbs().maxCoeff() == 0.0);
  CHECK(rw.rho == rho);
}
