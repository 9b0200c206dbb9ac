#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "isolab/csrecovery.hpp"
#include "isolab/ensembles.hpp"

using namespace isolab;

namespace {

DenseMatrix gaussian_sensing(Index rows, Index cols, std::uint64_t seed) {
  WeightSpec ws;
  ws.gen = {GenTag::M2, 1.0};
  ws.rows = rows;
  ws.cols = cols;
  ws.seed = {seed, 0};
  return generate(ws);
}

double l1(const Vector& v) { return v.cwiseAbs().sum(); }

}  // namespace

TEST_CASE("sparse signals have unit-floor magnitudes on a sorted support") {
  RngStream rng({300, 0});
  const SparseSignal s = gen_sparse_signal(50, 8, rng);
  CHECK(s.dimension == 50);
  REQUIRE(s.support.size() == 8);
  REQUIRE(s.values.size() == 8);
  CHECK(std::is_sorted(s.support.begin(), s.support.end()));
  CHECK(std::adjacent_find(s.support.begin(), s.support.end()) ==
        s.support.end());
  for (Index j : s.support) {
    CHECK(j >= 0);
    CHECK(j < 50);
  }
  for (double v : s.values) CHECK(std::abs(v) >= 1.0);

  const Vector d = s.dense();
  REQUIRE(d.size() == 50);
  CHECK(d.cwiseAbs().sum() ==
        doctest::Approx(std::accumulate(
            s.values.begin(), s.values.end(), 0.0,
            [](double a, double b) { return a + std::abs(b); })));
  for (std::size_t k = 0; k < s.support.size(); ++k)
    CHECK(d[s.support[k]] == s.values[k]);
}

TEST_CASE("signal generation is a pure function of the seed") {
  RngStream r1({301, 7}), r2({301, 7}), r3({301, 8});
  const SparseSignal a = gen_sparse_signal(30, 5, r1);
  const SparseSignal b = gen_sparse_signal(30, 5, r2);
  const SparseSignal c = gen_sparse_signal(30, 5, r3);
  CHECK(a.support == b.support);
  CHECK(a.values == b.values);
  CHECK((a.support != c.support || a.values != c.values));
}

TEST_CASE("signal generation validation") {
  RngStream rng({302, 0});
  CHECK_THROWS_AS((void)gen_sparse_signal(0, 0, rng), ValidationError);
  CHECK_THROWS_AS((void)gen_sparse_signal(10, 11, rng), ShapeError);
  CHECK_THROWS_AS((void)gen_sparse_signal(10, -1, rng), ShapeError);
  const SparseSignal empty = gen_sparse_signal(10, 0, rng);
  CHECK(empty.support.empty());
  CHECK(empty.dense().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noiseless observation is exactly rho W beta") {
  RngStream rng({303, 0});
  const SparseSignal s = gen_sparse_signal(12, 3, rng);
  const DenseMatrix w = gaussian_sensing(6, 12, 304);
  RngStream obs_rng({305, 0}), probe({305, 0});
  const CsInstance inst = observe(s, w, 2.0, 0.0, obs_rng);
  CHECK(inst.rho == 2.0);
  CHECK((inst.observations - 2.0 * (w * s.dense())).cwiseAbs().maxCoeff() ==
        0.0);
  // sigma = 0 consumes no draws
  CHECK(obs_rng.next_u64() == probe.next_u64());
}

TEST_CASE("noisy observation adds deterministic Gaussian noise") {
  RngStream rng({306, 0});
  const SparseSignal s = gen_sparse_signal(12, 3, rng);
  const DenseMatrix w = gaussian_sensing(6, 12, 307);
  RngStream r1({308, 1}), r2({308, 1});
  const CsInstance a = observe(s, w, 1.0, 0.25, r1);
  const CsInstance b = observe(s, w, 1.0, 0.25, r2);
  CHECK((a.observations - b.observations).cwiseAbs().maxCoeff() == 0.0);
  const Vector resid = a.observations - w * s.dense();
  CHECK(resid.cwiseAbs().maxCoeff() > 0.0);
  CHECK(resid.cwiseAbs().maxCoeff() < 0.25 * 6);  // crude 6-sigma sanity
}

TEST_CASE("observation validation") {
  RngStream rng({309, 0});
  const SparseSignal s = gen_sparse_signal(12, 3, rng);
  const DenseMatrix w = gaussian_sensing(6, 12, 310);
  CHECK_THROWS_AS((void)observe(s, gaussian_sensing(6, 11, 311), 1.0, 0.0, rng),
                  ShapeError);
  CHECK_THROWS_AS((void)observe(s, w, 0.0, 0.0, rng), ValidationError);
  CHECK_THROWS_AS((void)observe(s, w, 1.0, -0.1, rng), ValidationError);
  DenseMatrix bad = w;
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS((void)observe(s, bad, 1.0, 0.0, rng), ValidationError);
}

TEST_CASE("identity sensing reduces the selector to soft thresholding") {
  // with W = I both constraint forms read ||y - beta||_inf <= delta, whose
  // l1-minimal solution is the entrywise shrinkage of y by delta
  SparseSignal s;
  s.dimension = 5;
  s.support = {0, 1, 2, 4};
  s.values = {1.0, -2.0, 0.1, 3.0};
  const DenseMatrix eye = DenseMatrix::Identity(5, 5);
  RngStream rng({312, 0});
  const CsInstance inst = observe(s, eye, 1.0, 0.0, rng);
  const double delta = 0.25;
  for (ConstraintForm form :
       {ConstraintForm::Correlation, ConstraintForm::Residual}) {
    DantzigOptions opts;
    opts.form = form;
    const CsResult res = dantzig_select(inst, delta, opts);
    REQUIRE(res.solver_status == SolverStatus::Optimal);
    Vector want(5);
    want << 0.75, -1.75, 0.0, 0.0, 2.75;
    CHECK((res.estimate - want).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(res.constraint_level == delta);
    CHECK(res.duality_gap <= 1e-6);
  }
}

TEST_CASE("the reported estimate satisfies the active constraint form") {
  RngStream rng({313, 0});
  const SparseSignal s = gen_sparse_signal(40, 4, rng);
  const DenseMatrix w = gaussian_sensing(16, 40, 314);
  RngStream nrng({315, 0});
  const CsInstance inst = observe(s, w, 1.0, 0.05, nrng);

  DantzigOptions opts;
  opts.form = ConstraintForm::Correlation;
  const CsResult corr = dantzig_select(inst, 0.2, opts);
  const Vector rc = w.transpose() * (inst.observations - w * corr.estimate);
  CHECK(rc.cwiseAbs().maxCoeff() <= 0.2 + 1e-6);
  CHECK(corr.constraint_violation <= 1e-6);

  opts.form = ConstraintForm::Residual;
  const CsResult resid = dantzig_select(inst, 0.2, opts);
  const Vector rr = w * resid.estimate - inst.observations;
  CHECK(rr.cwiseAbs().maxCoeff() <= 0.2 + 1e-6);
  CHECK(resid.constraint_violation <= 1e-6);
}

TEST_CASE("the selector never beats a feasible point on the l1 objective") {
  // noiseless: the truth itself is feasible for every delta > 0, so the
  // optimum must come in at or below its l1 norm
  RngStream rng({316, 0});
  const SparseSignal s = gen_sparse_signal(36, 3, rng);
  const DenseMatrix w = gaussian_sensing(18, 36, 317);
  RngStream orng({318, 0});
  const CsInstance inst = observe(s, w, 1.0, 0.0, orng);
  const CsResult res = dantzig_select(inst, 1e-4);
  REQUIRE(res.solver_status == SolverStatus::Optimal);
  CHECK(l1(res.estimate) <= l1(s.dense()) + 1e-6);
}

TEST_CASE("rho folds into the sensing matrix consistently") {
  RngStream rng({319, 0});
  const SparseSignal s = gen_sparse_signal(24, 3, rng);
  const DenseMatrix w = gaussian_sensing(12, 24, 320);
  RngStream r1({321, 0}), r2({321, 0});
  const CsInstance scaled = observe(s, w, 1.7, 0.0, r1);
  const CsInstance folded = observe(s, DenseMatrix(1.7 * w), 1.0, 0.0, r2);
  const CsResult a = dantzig_select(scaled, 1e-3);
  const CsResult b = dantzig_select(folded, 1e-3);
  REQUIRE(a.solver_status == SolverStatus::Optimal);
  REQUIRE(b.solver_status == SolverStatus::Optimal);
  CHECK((a.estimate - b.estimate).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("noiseless gaussian sensing recovers the planted signal") {
  RngStream rng({322, 0});
  const SparseSignal s = gen_sparse_signal(200, 5, rng);
  const DenseMatrix w = gaussian_sensing(60, 200, 323);
  RngStream orng({324, 0});
  const CsInstance inst = observe(s, w, 1.0, 0.0, orng);
  const CsResult res = dantzig_select(inst, 1e-6);
  REQUIRE(res.solver_status == SolverStatus::Optimal);
  CHECK((res.estimate - s.dense()).norm() < 1e-4);
  CHECK(res.duality_gap <= 1e-6);
  CHECK(res.iterations <= 200);
}

TEST_CASE("support refit strips the one-stage shrinkage bias") {
  RngStream rng({340, 0});
  const SparseSignal s = gen_sparse_signal(300, 8, rng);
  const DenseMatrix w = gaussian_sensing(100, 300, 341);
  RngStream orng({342, 0});
  const double sigma = 0.05;
  const CsInstance inst = observe(s, w, 1.0, sigma, orng);

  double max_col = 0.0;
  for (Index j = 0; j < w.cols(); ++j)
    max_col = std::max(max_col, w.col(j).norm());
  const double delta = sigma * std::sqrt(2.0 * std::log(300.0)) * max_col;

  const CsResult res = dantzig_select(inst, delta);
  REQUIRE(res.solver_status == SolverStatus::Optimal);
  const Vector refit = refit_on_support(inst, res.estimate);

  const Vector truth = s.dense();
  const double raw_err = (res.estimate - truth).norm();
  const double refit_err = (refit - truth).norm();
  CHECK(refit_err < raw_err);
  CHECK(refit_err < 0.5);  // near the least-squares floor sigma sqrt(S)

  // the refit support is exactly the planted one
  std::vector<Index> nz;
  for (Index j = 0; j < refit.size(); ++j)
    if (refit[j] != 0.0) nz.push_back(j);
  CHECK(nz == s.support);
}

TEST_CASE("refit keeps noiseless recovery exact") {
  RngStream rng({322, 0});
  const SparseSignal s = gen_sparse_signal(200, 5, rng);
  const DenseMatrix w = gaussian_sensing(60, 200, 323);
  RngStream orng({324, 0});
  const CsInstance inst = observe(s, w, 1.0, 0.0, orng);
  const CsResult res = dantzig_select(inst, 1e-6);
  REQUIRE(res.solver_status == SolverStatus::Optimal);
  const Vector refit = refit_on_support(inst, res.estimate);
  CHECK((refit - s.dense()).norm() < 1e-8);
}

TEST_CASE("refit falls back gracefully on degenerate selections") {
  RngStream rng({343, 0});
  const SparseSignal s = gen_sparse_signal(10, 2, rng);
  const DenseMatrix w = gaussian_sensing(5, 10, 344);
  RngStream orng({345, 0});
  const CsInstance inst = observe(s, w, 1.0, 0.0, orng);

  // nothing clears the threshold -> zero estimator
  const Vector zeros = refit_on_support(inst, Vector::Zero(10));
  CHECK(zeros.norm() == 0.0);

  // a dense estimate selects more coordinates than observations -> unchanged
  const Vector dense = Vector::Constant(10, 1.0);
  const Vector kept = refit_on_support(inst, dense);
  CHECK((kept - dense).norm() == 0.0);

  CHECK_THROWS_AS((void)refit_on_support(inst, Vector::Zero(7)), ShapeError);
}

TEST_CASE("iteration cap is honored without throwing") {
  RngStream rng({325, 0});
  const SparseSignal s = gen_sparse_signal(30, 3, rng);
  const DenseMatrix w = gaussian_sensing(15, 30, 326);
  RngStream orng({327, 0});
  const CsInstance inst = observe(s, w, 1.0, 0.0, orng);
  DantzigOptions opts;
  opts.max_iterations = 1;
  const CsResult res = dantzig_select(inst, 1e-6, opts);
  CHECK(res.solver_status == SolverStatus::MaxIterations);
  CHECK(res.iterations == 1);
}

TEST_CASE("selector validation") {
  RngStream rng({328, 0});
  const SparseSignal s = gen_sparse_signal(10, 2, rng);
  const DenseMatrix w = gaussian_sensing(5, 10, 329);
  RngStream orng({330, 0});
  CsInstance inst = observe(s, w, 1.0, 0.0, orng);
  CHECK_THROWS_AS((void)dantzig_select(inst, 0.0), ValidationError);
  CHECK_THROWS_AS((void)dantzig_select(inst, -1.0), ValidationError);
  DantzigOptions opts;
  opts.max_iterations = 0;
  CHECK_THROWS_AS((void)dantzig_select(inst, 0.1, opts), ValidationError);
  opts.max_iterations = 10;
  opts.tolerance = 0.0;
  CHECK_THROWS_AS((void)dantzig_select(inst, 0.1, opts), ValidationError);
  inst.observations = Vector::Zero(4);
  CHECK_THROWS_AS((void)dantzig_select(inst, 0.1), ShapeError);
}

TEST_CASE("ideal mse hand example") {
  SparseSignal s;
  s.dimension = 2;
  s.support = {0, 1};
  s.values = {3.0, 0.5};
  Vector est(2);
  est << 3.0, 0.0;
  // denominator min(9,1) + min(0.25,1) = 1.25; numerator 0.25
  CHECK(ideal_mse(s, est, 1.0) == doctest::Approx(std::sqrt(0.2)));
  CHECK(ideal_mse(s, s.dense(), 1.0) == 0.0);
}

TEST_CASE("ideal mse validation") {
  SparseSignal s;
  s.dimension = 3;
  s.support = {1};
  s.values = {2.0};
  CHECK_THROWS_AS((void)ideal_mse(s, Vector::Zero(4), 1.0), ShapeError);
  CHECK_THROWS_AS((void)ideal_mse(s, Vector::Zero(3), -1.0), ValidationError);
  // sigma = 0 zeroes every min(beta_j^2, sigma^2) term
  CHECK_THROWS_AS((void)ideal_mse(s, s.dense(), 0.0), DegenerateError);
}
