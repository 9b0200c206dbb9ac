#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "isolab/datasets.hpp"
#include "isolab/ensembles.hpp"
#include "isolab/esn.hpp"

using namespace isolab;

namespace {

DenseMatrix random_mat(Index r, Index c, std::uint64_t seed) {
  RngStream rng({seed, 0});
  DenseMatrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rng.uniform_pm1();
  return m;
}

EsnConfig base_config(Index n) {
  EsnConfig cfg;
  cfg.n_nodes = n;
  cfg.leak = 1.0;
  cfg.input_scale = 1.0;
  cfg.bias = 0.0;
  cfg.activation = Activation::Tanh;
  cfg.input_weights = DenseMatrix::Ones(n, 1);
  return cfg;
}

}  // namespace

TEST_CASE("zero leak freezes the zero state") {
  EsnConfig cfg = base_config(4);
  cfg.leak = 0.0;
  const auto st = run_reservoir(cfg, random_mat(1, 9, 140), random_mat(4, 4, 141));
  CHECK(st.states.cwiseAbs().maxCoeff() == 0.0);
  CHECK(st.labels.empty());
}

TEST_CASE("constant bias drive saturates at tanh(bias)") {
  EsnConfig cfg = base_config(3);
  cfg.bias = std::numbers::pi / 4.0;
  cfg.input_weights = DenseMatrix::Zero(3, 1);
  const auto st =
      run_reservoir(cfg, random_mat(1, 7, 142), DenseMatrix::Zero(3, 3));
  const double want = std::tanh(std::numbers::pi / 4.0);
  CHECK((st.states.array() - want).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("identity activation gives the linear recurrence") {
  EsnConfig cfg = base_config(2);
  cfg.activation = Activation::Identity;
  cfg.leak = 0.5;
  cfg.bias = 0.1;
  DenseMatrix w(2, 2);
  w << 0.2, 0.0, 0.0, -0.3;
  DenseMatrix input(1, 2);
  input << 1.0, -2.0;
  const auto st = run_reservoir(cfg, input, w);

  Vector x = Vector::Zero(2);
  for (Index t = 0; t < 2; ++t) {
    const Vector pre = w * x + cfg.input_weights * input.col(t) +
                       Vector::Constant(2, 0.1);
    x = 0.5 * x + 0.5 * pre;
    CHECK((st.states.col(t) - x).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("washout drops exactly the leading columns") {
  EsnConfig cfg = base_config(5);
  const DenseMatrix input = random_mat(1, 11, 143);
  const DenseMatrix w = 0.4 * random_mat(5, 5, 144);
  const auto full = run_reservoir(cfg, input, w);
  cfg.washout = 4;
  const auto cut = run_reservoir(cfg, input, w);
  REQUIRE(cut.states.cols() == 7);
  CHECK((cut.states - full.states.rightCols(7)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tanh states stay strictly inside (-1, 1) with full leak") {
  EsnConfig cfg = base_config(6);
  cfg.bias = 0.7;
  const auto st =
      run_reservoir(cfg, 3.0 * random_mat(1, 40, 145), random_mat(6, 6, 146));
  CHECK(st.states.maxCoeff() < 1.0);
  CHECK(st.states.minCoeff() > -1.0);
}

TEST_CASE("reservoir validation catches bad configurations") {
  EsnConfig cfg = base_config(3);
  const DenseMatrix input = random_mat(1, 5, 147);
  const DenseMatrix w3 = random_mat(3, 3, 148);
  CHECK_THROWS_AS((void)run_reservoir(cfg, input, random_mat(2, 2, 149)),
                  ShapeError);
  CHECK_THROWS_AS((void)run_reservoir(cfg, random_mat(2, 5, 150), w3),
                  ShapeError);
  cfg.leak = 1.5;
  CHECK_THROWS_AS((void)run_reservoir(cfg, input, w3), ValidationError);
  cfg.leak = 1.0;
  cfg.input_scale = 0.0;
  CHECK_THROWS_AS((void)run_reservoir(cfg, input, w3), ValidationError);
  cfg.input_scale = 1.0;
  cfg.washout = 6;
  CHECK_THROWS_AS((void)run_reservoir(cfg, input, w3), ValidationError);
  cfg.washout = 0;
  DenseMatrix bad = input;
  bad(0, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)run_reservoir(cfg, bad, w3), ValidationError);
}

TEST_CASE("readout training matches ridge identities") {
  ReservoirStates st;
  st.states = DenseMatrix::Identity(5, 5);
  const DenseMatrix targets = random_mat(2, 5, 151);
  const Readout ro = train_readout(st, targets, 0.0);
  CHECK((ro.w_out - targets).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(ro.lambda_used == 0.0);

  st.states = random_mat(4, 10, 152);
  CHECK_THROWS_AS((void)train_readout(st, random_mat(2, 9, 153), 0.1),
                  ShapeError);
}

TEST_CASE("pointwise classification breaks ties toward the lowest class") {
  Readout ro;
  ro.w_out = DenseMatrix::Zero(3, 2);  // all scores zero
  ReservoirStates st;
  st.states = random_mat(2, 8, 154);
  const auto cls = classify_pointwise(ro, st);
  for (int c : cls) CHECK(c == 0);

  ro.w_out = DenseMatrix::Identity(2, 2);
  st.states = DenseMatrix::Zero(2, 1);
  st.states(1, 0) = 2.0;
  CHECK(classify_pointwise(ro, st) == std::vector<int>{1});

  ro.w_out = random_mat(2, 5, 155);
  CHECK_THROWS_AS((void)classify_pointwise(ro, st), ShapeError);
}

TEST_CASE("accuracy reports overall and per-class percentages") {
  const std::vector<int> truth = {0, 1, 1, 1, 0, 0};
  const std::vector<int> pred = {0, 1, 0, 1, 0, 1};
  const auto rep = accuracy(pred, truth, 2);
  CHECK(rep.overall == doctest::Approx(66.67).epsilon(0.001));
  REQUIRE(rep.per_class.size() == 2);
  CHECK(*rep.per_class[0] == doctest::Approx(100.0 * 2 / 3));
  CHECK(*rep.per_class[1] == doctest::Approx(100.0 * 2 / 3));
}

TEST_CASE("accuracy flags empty classes instead of inventing numbers") {
  const std::vector<int> truth = {0, 0, 0};
  const std::vector<int> pred = {0, 1, 0};
  const auto rep = accuracy(pred, truth, 2);
  CHECK(rep.overall == doctest::Approx(100.0 * 2 / 3));
  CHECK(rep.per_class[0].has_value());
  CHECK(!rep.per_class[1].has_value());
}

TEST_CASE("accuracy validation") {
  CHECK_THROWS_AS((void)accuracy({0, 1}, {0}, 2), ShapeError);
  CHECK_THROWS_AS((void)accuracy({0}, {5}, 2), ValidationError);
  CHECK_THROWS_AS((void)accuracy({}, {}, 2), ValidationError);
}

TEST_CASE("separation is invariant under orthogonal state transforms") {
  RngStream rng({156, 0});
  std::vector<ReservoirStates> seqs;
  for (int c = 0; c < 2; ++c)
    for (int s = 0; s < 3; ++s) {
      ReservoirStates st;
      st.states = random_mat(4, 6, 160 + std::uint64_t(4 * c + s));
      st.labels.assign(6, c);
      seqs.push_back(std::move(st));
    }
  const double base = separation_ratio(seqs, 2).mean;

  // Householder reflection: Q = I - 2 q q^T
  const Vector q = rng.unit_sphere(4);
  const DenseMatrix qm =
      DenseMatrix::Identity(4, 4) - 2.0 * (q * q.transpose());
  std::vector<ReservoirStates> rotated = seqs;
  for (auto& st : rotated) st.states = qm * st.states;
  const double turned = separation_ratio(rotated, 2).mean;
  CHECK(turned == doctest::Approx(base).epsilon(1e-12));

  // order of sequences is irrelevant
  std::swap(rotated[0], rotated[4]);
  CHECK(separation_ratio(rotated, 2).mean ==
        doctest::Approx(turned).epsilon(1e-12));
}

TEST_CASE("separation validation") {
  ReservoirStates a;
  a.states = random_mat(3, 4, 170);
  a.labels.assign(4, 0);
  CHECK_THROWS_AS((void)separation_ratio({}, 2), ValidationError);
  CHECK_THROWS_AS((void)separation_ratio({a}, 2), ValidationError);  // class 1 empty
  ReservoirStates b = a;
  b.labels.assign(4, 1);
  b.states = random_mat(3, 5, 171);  // mismatched T
  CHECK_THROWS_AS((void)separation_ratio({a, b}, 2), ShapeError);
  ReservoirStates c = a;
  c.labels.clear();
  CHECK_THROWS_AS((void)separation_ratio({a, c}, 2), ValidationError);
}

TEST_CASE("a modestly scaled reservoir separates sine from square") {
  // end-to-end smoke: spectral radius well below 1 via crude normalization
  const Index n = 80;
  EsnConfig cfg = base_config(n);
  cfg.bias = std::numbers::pi / 4.0;

  WeightSpec ws;
  ws.gen = {GenTag::M1, 1.0};
  ws.rows = n;
  ws.cols = n;
  ws.seed = {172, 0};
  const DenseMatrix w = generate(ws);
  RngStream srng({173, 0});
  const double rho = scale_factor({ScaleTag::R2, 500}, w, srng);
  const DenseMatrix w_scaled = rho * w;

  RngStream train_rng({174, 0}), test_rng({175, 0});
  const WaveDataset train = gen_wave_dataset(40, 10, 1, 0.05, train_rng);
  const WaveDataset test = gen_wave_dataset(40, 10, 1, 0.05, test_rng);

  const Index t_len = 400;
  DenseMatrix states(n, 2 * t_len);
  DenseMatrix targets = DenseMatrix::Zero(2, 2 * t_len);
  for (int i = 0; i < 2; ++i) {
    const auto st = run_reservoir(cfg, train.sequences[std::size_t(i)].input,
                                  w_scaled);
    states.middleCols(i * t_len, t_len) = st.states;
    for (Index t = 0; t < t_len; ++t) targets(i, i * t_len + t) = 1.0;
  }
  ReservoirStates all;
  all.states = states;
  const double lambda = 1e-6 * states.squaredNorm() / double(n);
  const Readout ro = train_readout(all, targets, lambda);

  DenseMatrix test_states(n, 2 * t_len);
  std::vector<int> test_labels;
  for (int i = 0; i < 2; ++i) {
    const auto st =
        run_reservoir(cfg, test.sequences[std::size_t(i)].input, w_scaled);
    test_states.middleCols(i * t_len, t_len) = st.states;
    for (Index t = 0; t < t_len; ++t) test_labels.push_back(i);
  }
  ReservoirStates held;
  held.states = test_states;
  const auto rep = accuracy(classify_pointwise(ro, held), test_labels, 2);
  CHECK(rep.overall > 75.0);
}
