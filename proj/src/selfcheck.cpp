#include "isolab/selfcheck.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>

#include "isolab/harness.hpp"
#include "isolab/oracles.hpp"

namespace isolab {

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("?");
}

void check(std::vector<CheckResult>& out, std::string name,
           const std::function<std::pair<bool, std::string>()>& body) {
  CheckResult r;
  r.name = std::move(name);
  try {
    auto [pass, detail] = body();
    r.pass = pass;
    r.detail = std::move(detail);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  out.push_back(std::move(r));
}

DenseMatrix random_pm1(Index rows, Index cols, std::uint64_t value,
                       std::uint64_t stream = 0) {
  RngStream rng({value, stream});
  DenseMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform_pm1();
  return m;
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-6);
}

std::filesystem::path fresh_tmp_dir(const std::string& leaf) {
  const auto dir =
      std::filesystem::temp_directory_path() / "isolab_selfcheck" / leaf;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

// --- numerics ---------------------------------------------------------------

std::vector<CheckResult> run_numerics_checks() {
  std::vector<CheckResult> out;

  check(out, "spectral radius of identity(5)", [] {
    const double r = spectral_radius(DenseMatrix::Identity(5, 5));
    return std::make_pair(std::abs(r - 1.0) <= 1e-12, "got " + fmt(r));
  });

  check(out, "spectral radius of diag(0.2, -0.7, 0.3)", [] {
    DenseMatrix m = DenseMatrix::Zero(3, 3);
    m(0, 0) = 0.2;
    m(1, 1) = -0.7;
    m(2, 2) = 0.3;
    const double r = spectral_radius(m);
    return std::make_pair(std::abs(r - 0.7) <= 1e-12, "got " + fmt(r));
  });

  check(out, "spectral radius, seeded 4x4 vs quartic-root oracle", [] {
    const DenseMatrix m = random_pm1(4, 4, 20260401);
    const double got = spectral_radius(m);
    const double want = oracles::spectral_radius_ref(m);
    return std::make_pair(rel_err(got, want) <= 1e-6,
                          "got " + fmt(got) + ", oracle " + fmt(want));
  });

  check(out, "spectral radius vs root oracle, 100 seeded 3x3 and 4x4", [] {
    double worst = 0.0;
    for (Index n : {Index(3), Index(4)})
      for (std::uint64_t k = 0; k < 100; ++k) {
        const DenseMatrix m = random_pm1(n, n, 3000 + 100 * std::uint64_t(n) + k);
        worst = std::max(worst,
                         rel_err(spectral_radius(m),
                                 oracles::spectral_radius_ref(m)));
      }
    return std::make_pair(worst <= 1e-6, "worst relative error " + fmt(worst));
  });

  check(out, "largest singular value of identity(7)", [] {
    const double s = largest_singular_value(DenseMatrix::Identity(7, 7));
    return std::make_pair(std::abs(s - 1.0) <= 1e-12, "got " + fmt(s));
  });

  check(out, "largest singular value of rank-1 outer product (2 * 3)", [] {
    RngStream rng({711, 0});
    Vector u = rng.unit_sphere(5) * 2.0;  // ||u|| = 2
    Vector v = rng.unit_sphere(7) * 3.0;  // ||v|| = 3
    const double s = largest_singular_value(u * v.transpose());
    return std::make_pair(std::abs(s - 6.0) <= 1e-9, "got " + fmt(s));
  });

  check(out, "largest singular value, seeded 3x5 vs Gram-root oracle", [] {
    const DenseMatrix m = random_pm1(3, 5, 20260402);
    const double got = largest_singular_value(m);
    const double want = oracles::largest_singular_value_ref(m);
    return std::make_pair(rel_err(got, want) <= 1e-6,
                          "got " + fmt(got) + ", oracle " + fmt(want));
  });

  check(out, "largest singular value vs root oracle, 100 seeded 3x3 and 4x4",
        [] {
          double worst = 0.0;
          for (Index n : {Index(3), Index(4)})
            for (std::uint64_t k = 0; k < 100; ++k) {
              const DenseMatrix m =
                  random_pm1(n, n, 4000 + 100 * std::uint64_t(n) + k);
              worst = std::max(
                  worst, rel_err(largest_singular_value(m),
                                 oracles::largest_singular_value_ref(m)));
            }
          return std::make_pair(worst <= 1e-6,
                                "worst relative error " + fmt(worst));
        });

  check(out, "ridge with identity states and lambda 0 returns targets", [] {
    const DenseMatrix y = random_pm1(2, 6, 712);
    const DenseMatrix w = ridge_solve(DenseMatrix::Identity(6, 6), y, 0.0);
    const double err = (w - y).cwiseAbs().maxCoeff();
    return std::make_pair(err <= 1e-12, "max deviation " + fmt(err));
  });

  check(out, "ridge with zero targets returns zero", [] {
    const DenseMatrix x = random_pm1(4, 9, 713);
    const DenseMatrix w = ridge_solve(x, DenseMatrix::Zero(3, 9), 0.5);
    const double err = w.cwiseAbs().maxCoeff();
    return std::make_pair(err == 0.0, "max coefficient " + fmt(err));
  });

  check(out, "ridge 3x8 / 2x8, lambda 0.1, vs cofactor-inverse oracle", [] {
    const DenseMatrix x = random_pm1(3, 8, 714);
    const DenseMatrix y = random_pm1(2, 8, 715);
    const DenseMatrix got = ridge_solve(x, y, 0.1);
    DenseMatrix gram = x * x.transpose();
    gram.diagonal().array() += 0.1;
    const DenseMatrix want = y * x.transpose() * oracles::inverse_ref(gram);
    const double err = (got - want).norm() / want.norm();
    return std::make_pair(err <= 1e-10, "relative error " + fmt(err));
  });

  check(out, "ridge normal-equation residual on 100 seeded instances", [] {
    double worst = 0.0;
    const double lambdas[] = {1e-6, 1e-3, 0.1, 1.0, 10.0};
    for (std::uint64_t k = 0; k < 100; ++k) {
      const DenseMatrix x = random_pm1(6, 14, 5000 + k);
      const DenseMatrix y = random_pm1(2, 14, 5100 + k);
      const double lambda = lambdas[k % 5];
      const DenseMatrix w = ridge_solve(x, y, lambda);
      DenseMatrix gram = x * x.transpose();
      gram.diagonal().array() += lambda;
      const DenseMatrix rhs = y * x.transpose();
      const double res = (w * gram - rhs).norm() / std::max(1.0, rhs.norm());
      worst = std::max(worst, res);
    }
    return std::make_pair(worst <= 1e-8, "worst residual " + fmt(worst));
  });

  check(out, "rng repeatability: same seed, identical first 1000 draws", [] {
    RngStream a({99, 7}), b({99, 7});
    for (int i = 0; i < 1000; ++i)
      if (a.uniform01() != b.uniform01())
        return std::make_pair(false, "diverged at draw " + std::to_string(i));
    return std::make_pair(true, std::string("1000 draws identical"));
  });

  check(out, "rng sphere sample has unit norm", [] {
    RngStream rng({100, 0});
    const double n = rng.unit_sphere(10).norm();
    return std::make_pair(std::abs(n - 1.0) <= 1e-12, "norm " + fmt(n));
  });

  check(out, "rng normal mean over 1e6 draws within 0.005", [] {
    RngStream rng({101, 0});
    double sum = 0.0;
    for (int i = 0; i < 1000000; ++i) sum += rng.normal();
    const double mean = sum / 1e6;
    return std::make_pair(std::abs(mean) <= 0.005, "mean " + fmt(mean));
  });

  return out;
}

// --- ensembles ---------------------------------------------------------------

std::vector<CheckResult> run_ensemble_checks() {
  std::vector<CheckResult> out;

  check(out, "M1 columns land on the unit sphere (50x10)", [] {
    WeightSpec spec;
    spec.gen = {GenTag::M1, 1.0};
    spec.rows = 50;
    spec.cols = 10;
    spec.seed = {201, 0};
    const DenseMatrix w = generate(spec);
    double worst = 0.0;
    for (Index j = 0; j < w.cols(); ++j)
      worst = std::max(worst, std::abs(w.col(j).norm() - 1.0));
    return std::make_pair(worst <= 1e-12, "worst norm deviation " + fmt(worst));
  });

  check(out, "M4 200x200 at 20% density has exactly 8000 nonzeros", [] {
    WeightSpec spec;
    spec.gen = {GenTag::M4, 0.2};
    spec.rows = 200;
    spec.cols = 200;
    spec.seed = {202, 0};
    const DenseMatrix w = generate(spec);
    const Index nnz = Index((w.array() != 0.0).count());
    return std::make_pair(nnz == 8000, std::to_string(nnz) + " nonzeros");
  });

  check(out, "M2 200x200 empirical entry variance near 1/200", [] {
    WeightSpec spec;
    spec.gen = {GenTag::M2, 1.0};
    spec.rows = 200;
    spec.cols = 200;
    spec.seed = {203, 0};
    const DenseMatrix w = generate(spec);
    const double mean = w.mean();
    const double var =
        (w.array() - mean).square().sum() / double(w.size() - 1);
    const double target = 1.0 / 200.0;
    return std::make_pair(std::abs(var - target) <= 0.1 * target,
                          "variance " + fmt(var) + ", target " + fmt(target));
  });

  check(out, "R1 returns exactly 1", [] {
    RngStream rng({204, 0});
    const double rho =
        scale_factor({ScaleTag::R1, 100}, random_pm1(6, 6, 205), rng);
    return std::make_pair(rho == 1.0, "rho " + fmt(rho));
  });

  check(out, "R3 rescales the spectral radius to 1", [] {
    const DenseMatrix w = random_pm1(10, 10, 206);
    RngStream rng({207, 0});
    const double rho = scale_factor({ScaleTag::R3, 100}, w, rng);
    const double sr = spectral_radius(rho * w);
    return std::make_pair(std::abs(sr - 1.0) <= 1e-6,
                          "scaled radius " + fmt(sr));
  });

  check(out, "R4 equals 0.9 x R3 exactly", [] {
    const DenseMatrix w = random_pm1(9, 9, 208);
    RngStream rng({209, 0});
    const double r3 = scale_factor({ScaleTag::R3, 100}, w, rng);
    const double r4 = scale_factor({ScaleTag::R4, 100}, w, rng);
    return std::make_pair(r4 == 0.9 * r3,
                          "r3 " + fmt(r3) + ", r4 " + fmt(r4));
  });

  check(out, "R5 rescales the largest singular value to 1", [] {
    const DenseMatrix w = random_pm1(8, 12, 210);
    RngStream rng({211, 0});
    const double rho = scale_factor({ScaleTag::R5, 100}, w, rng);
    const double sv = largest_singular_value(rho * w);
    return std::make_pair(std::abs(sv - 1.0) <= 1e-6,
                          "scaled sigma_max " + fmt(sv));
  });

  check(out, "identity debug generator emits the identity matrix", [] {
    WeightSpec spec;
    spec.gen = {GenTag::Identity, 1.0};
    spec.rows = 7;
    spec.cols = 7;
    spec.seed = {212, 0};
    const DenseMatrix w = generate(spec);
    const double err = (w - DenseMatrix::Identity(7, 7)).cwiseAbs().maxCoeff();
    return std::make_pair(err == 0.0, "max deviation " + fmt(err));
  });

  return out;
}

// --- isometry ----------------------------------------------------------------

std::vector<CheckResult> run_isometry_checks() {
  std::vector<CheckResult> out;

  check(out, "nii of the identity is [rho, rho] exactly", [] {
    RngStream rng({301, 0});
    const auto iv = estimate_nii(DenseMatrix::Identity(10, 10), 3.0, 50, rng);
    return std::make_pair(iv.lower == 3.0 && iv.upper == 3.0,
                          "[" + fmt(iv.lower) + ", " + fmt(iv.upper) + "]");
  });

  check(out, "nii of diag(2, 2) at rho 1 is [2, 2]", [] {
    RngStream rng({302, 0});
    const auto iv =
        estimate_nii(2.0 * DenseMatrix::Identity(2, 2), 1.0, 50, rng);
    const bool ok =
        std::abs(iv.lower - 2.0) <= 1e-12 && std::abs(iv.upper - 2.0) <= 1e-12;
    return std::make_pair(ok,
                          "[" + fmt(iv.lower) + ", " + fmt(iv.upper) + "]");
  });

  check(out, "rii of the 10x10 identity at sparsity 3 is [rho, rho]", [] {
    RngStream rng({303, 0});
    const auto iv =
        estimate_rii(DenseMatrix::Identity(10, 10), 2.5, 3, 50, rng);
    return std::make_pair(iv.lower == 2.5 && iv.upper == 2.5,
                          "[" + fmt(iv.lower) + ", " + fmt(iv.upper) + "]");
  });

  check(out, "nii scaling equivariance is exact on shared streams", [] {
    for (std::uint64_t k = 0; k < 20; ++k) {
      const DenseMatrix w = random_pm1(10, 10, 310 + k);
      RngStream r1({400, k}), r2({400, k});
      const auto base = estimate_nii(w, 1.0, 300, r1);
      const auto scaled = estimate_nii(w, 2.5, 300, r2);
      if (scaled.lower != 2.5 * base.lower || scaled.upper != 2.5 * base.upper)
        return std::make_pair(false, "seed " + std::to_string(k) +
                                         " endpoints not exact multiples");
    }
    return std::make_pair(true, std::string("20 seeds bit-exact"));
  });

  check(out, "rii scaling equivariance is exact on shared streams", [] {
    for (std::uint64_t k = 0; k < 20; ++k) {
      const DenseMatrix w = random_pm1(8, 20, 330 + k);
      RngStream r1({401, k}), r2({401, k});
      const auto base = estimate_rii(w, 1.0, 4, 300, r1);
      const auto scaled = estimate_rii(w, 1.75, 4, 300, r2);
      if (scaled.lower != 1.75 * base.lower ||
          scaled.upper != 1.75 * base.upper)
        return std::make_pair(false, "seed " + std::to_string(k) +
                                         " endpoints not exact multiples");
    }
    return std::make_pair(true, std::string("20 seeds bit-exact"));
  });

  check(out, "nii intervals sit inside the singular-value interval", [] {
    double worst_low = 0.0, worst_high = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k) {
      const DenseMatrix w = random_pm1(10, 10, 350 + k);
      const auto [smin, smax] = singular_value_range(w);
      RngStream rng({402, k});
      const auto iv = estimate_nii(w, 1.0, 500, rng);
      worst_low = std::max(worst_low, smin - iv.lower);
      worst_high = std::max(worst_high, iv.upper - smax);
      if (iv.lower < smin - 1e-9 || iv.upper > smax + 1e-9)
        return std::make_pair(false,
                              "seed " + std::to_string(k) + " escaped bounds");
    }
    return std::make_pair(true, "max excess low " + fmt(worst_low) +
                                    ", high " + fmt(worst_high));
  });

  return out;
}

// --- datasets ----------------------------------------------------------------

std::vector<CheckResult> run_dataset_checks() {
  std::vector<CheckResult> out;

  check(out, "period-4 noiseless waves match the exact samples", [] {
    RngStream rng({501, 0});
    const WaveDataset ds = gen_wave_dataset(4, 2, 1, 0.0, rng);
    const double want_sine[4] = {0.0, 1.0, 0.0, -1.0};
    const double want_square[4] = {1.0, 1.0, -1.0, -1.0};
    for (int t = 0; t < 8; ++t) {
      const double s = ds.sequences[0].input(0, t);
      const double q = ds.sequences[1].input(0, t);
      if (std::abs(s - want_sine[t % 4]) > 1e-9)
        return std::make_pair(false, "sine sample " + std::to_string(t) +
                                         " = " + fmt(s));
      if (q != want_square[t % 4])
        return std::make_pair(false, "square sample " + std::to_string(t) +
                                         " = " + fmt(q));
    }
    return std::make_pair(true, std::string("8 samples per class exact"));
  });

  check(out, "empirical noise std matches the configured sigma", [] {
    const double sigma = 0.3;
    RngStream noisy_rng({502, 0}), clean_rng({502, 0});
    const WaveDataset noisy = gen_wave_dataset(16, 1250, 1, sigma, noisy_rng);
    const WaveDataset clean = gen_wave_dataset(16, 1250, 1, 0.0, clean_rng);
    double sum = 0.0, ss = 0.0;
    long n = 0;
    for (std::size_t i = 0; i < noisy.sequences.size(); ++i) {
      const auto diff = noisy.sequences[i].input - clean.sequences[i].input;
      sum += diff.sum();
      ss += diff.array().square().sum();
      n += diff.size();
    }
    const double mean = sum / double(n);
    const double sd = std::sqrt(ss / double(n) - mean * mean);
    return std::make_pair(std::abs(sd - sigma) <= 0.05 * sigma,
                          "std " + fmt(sd) + " over " + std::to_string(n) +
                              " residuals");
  });

  return out;
}

// --- esn ----------------------------------------------------------------------

namespace {

EsnConfig tiny_esn(Index n, double leak, double input_scale, double bias,
                   Index input_dim = 1) {
  EsnConfig ec;
  ec.n_nodes = n;
  ec.leak = leak;
  ec.input_scale = input_scale;
  ec.bias = bias;
  ec.activation = Activation::Tanh;
  ec.input_weights = DenseMatrix::Ones(n, input_dim);
  ec.washout = 0;
  return ec;
}

}  // namespace

std::vector<CheckResult> run_esn_checks() {
  std::vector<CheckResult> out;

  check(out, "leak 0 freezes the reservoir at the zero state", [] {
    EsnConfig ec = tiny_esn(6, 0.0, 1.0, 0.4);
    const DenseMatrix input = random_pm1(1, 12, 601);
    const auto st = run_reservoir(ec, input, random_pm1(6, 6, 602));
    const double mx = st.states.cwiseAbs().maxCoeff();
    return std::make_pair(mx == 0.0, "max |state| " + fmt(mx));
  });

  check(out, "zero weights and bias pi/4 pin every state at tanh(pi/4)", [] {
    EsnConfig ec = tiny_esn(5, 1.0, 1.0, std::numbers::pi / 4.0);
    ec.input_weights = DenseMatrix::Zero(5, 1);
    const DenseMatrix input = random_pm1(1, 10, 603);
    const auto st = run_reservoir(ec, input, DenseMatrix::Zero(5, 5));
    const double want = std::tanh(std::numbers::pi / 4.0);
    const double err = (st.states.array() - want).abs().maxCoeff();
    return std::make_pair(err <= 1e-12,
                          "max deviation " + fmt(err) + " from " + fmt(want));
  });

  check(out, "two-node reservoir matches a hand unroll over 3 steps", [] {
    EsnConfig ec = tiny_esn(2, 0.8, 1.1, 0.2);
    DenseMatrix w_in(2, 1);
    w_in << 0.7, -0.4;
    ec.input_weights = w_in;
    DenseMatrix w(2, 2);
    w << 0.5, -0.3, 0.2, 0.1;
    DenseMatrix input(1, 3);
    input << 0.3, -0.5, 0.9;
    const auto st = run_reservoir(ec, input, w);

    double x0 = 0.0, x1 = 0.0;
    double worst = 0.0;
    for (int t = 0; t < 3; ++t) {
      const double u = input(0, t);
      const double p0 = 0.5 * x0 - 0.3 * x1 + 1.1 * 0.7 * u + 0.2;
      const double p1 = 0.2 * x0 + 0.1 * x1 + 1.1 * (-0.4) * u + 0.2;
      const double n0 = 0.2 * x0 + 0.8 * std::tanh(p0);
      const double n1 = 0.2 * x1 + 0.8 * std::tanh(p1);
      x0 = n0;
      x1 = n1;
      worst = std::max(worst, std::abs(st.states(0, t) - x0));
      worst = std::max(worst, std::abs(st.states(1, t) - x1));
    }
    return std::make_pair(worst <= 1e-12, "max deviation " + fmt(worst));
  });

  check(out, "readout on identity states with lambda 0 returns the targets",
        [] {
          ReservoirStates st;
          st.states = DenseMatrix::Identity(4, 4);
          const DenseMatrix targets = random_pm1(2, 4, 604);
          const Readout ro = train_readout(st, targets, 0.0);
          const double err = (ro.w_out - targets).cwiseAbs().maxCoeff();
          return std::make_pair(err <= 1e-12, "max deviation " + fmt(err));
        });

  check(out, "readout on zero targets is zero", [] {
    ReservoirStates st;
    st.states = random_pm1(3, 9, 605);
    const Readout ro = train_readout(st, DenseMatrix::Zero(2, 9), 0.7);
    const double err = ro.w_out.cwiseAbs().maxCoeff();
    return std::make_pair(err == 0.0, "max coefficient " + fmt(err));
  });

  check(out, "readout 3-node / 8-step vs cofactor-inverse oracle", [] {
    ReservoirStates st;
    st.states = random_pm1(3, 8, 606);
    const DenseMatrix targets = random_pm1(2, 8, 607);
    const Readout ro = train_readout(st, targets, 0.1);
    DenseMatrix gram = st.states * st.states.transpose();
    gram.diagonal().array() += 0.1;
    const DenseMatrix want =
        targets * st.states.transpose() * oracles::inverse_ref(gram);
    const double err = (ro.w_out - want).norm() / want.norm();
    return std::make_pair(err <= 1e-10, "relative error " + fmt(err));
  });

  check(out, "identity readout classifies basis states by index", [] {
    Readout ro;
    ro.w_out = DenseMatrix::Identity(3, 3);
    ReservoirStates st;
    st.states = DenseMatrix::Zero(3, 1);
    st.states(2, 0) = 1.0;
    const auto cls = classify_pointwise(ro, st);
    return std::make_pair(cls == std::vector<int>{2},
                          "class " + std::to_string(cls[0]));
  });

  check(out, "all-zero readout breaks ties toward class 0", [] {
    Readout ro;
    ro.w_out = DenseMatrix::Zero(3, 4);
    ReservoirStates st;
    st.states = random_pm1(4, 6, 608);
    const auto cls = classify_pointwise(ro, st);
    const bool ok =
        std::all_of(cls.begin(), cls.end(), [](int c) { return c == 0; });
    return std::make_pair(ok, std::string(ok ? "all zero" : "nonzero class"));
  });

  check(out, "classifier matches a direct per-column argmax", [] {
    Readout ro;
    ro.w_out = random_pm1(2, 6, 609);
    ReservoirStates st;
    st.states = random_pm1(6, 30, 610);
    const auto got = classify_pointwise(ro, st);
    for (Index t = 0; t < 30; ++t) {
      double best = -1e300;
      int arg = 0;
      for (int k = 0; k < 2; ++k) {
        double score = 0.0;
        for (Index i = 0; i < 6; ++i) score += ro.w_out(k, i) * st.states(i, t);
        if (score > best) {
          best = score;
          arg = k;
        }
      }
      if (got[std::size_t(t)] != arg)
        return std::make_pair(false, "column " + std::to_string(t));
    }
    return std::make_pair(true, std::string("30 columns agree"));
  });

  check(out, "accuracy of a perfect prediction is 100", [] {
    const std::vector<int> truth = {0, 1, 1, 0, 1};
    const auto rep = accuracy(truth, truth, 2);
    const bool ok = rep.overall == 100.0 && rep.per_class[0] == 100.0 &&
                    rep.per_class[1] == 100.0;
    return std::make_pair(ok, "overall " + fmt(rep.overall));
  });

  check(out, "accuracy of the binary complement is 0", [] {
    const std::vector<int> truth = {0, 1, 1, 0};
    const std::vector<int> pred = {1, 0, 0, 1};
    const auto rep = accuracy(pred, truth, 2);
    return std::make_pair(rep.overall == 0.0, "overall " + fmt(rep.overall));
  });

  check(out, "accuracy of the 4-of-6 hand case is 66.67", [] {
    const std::vector<int> truth = {0, 1, 1, 1, 0, 0};
    const std::vector<int> pred = {0, 1, 0, 1, 0, 1};
    const auto rep = accuracy(pred, truth, 2);
    return std::make_pair(std::abs(rep.overall - 66.67) <= 0.01,
                          "overall " + fmt(rep.overall));
  });

  check(out, "separation of identical sequences is 0", [] {
    ReservoirStates a;
    a.states = random_pm1(3, 5, 611);
    a.labels.assign(5, 0);
    ReservoirStates b = a;
    b.labels.assign(5, 1);
    const auto sep = separation_ratio({a, b}, 2);
    return std::make_pair(sep.mean == 0.0, "mean " + fmt(sep.mean));
  });

  check(out, "two singleton classes at unit distance give separation 0.5", [] {
    ReservoirStates a;
    a.states = DenseMatrix::Zero(2, 3);
    a.labels.assign(3, 0);
    ReservoirStates b;
    b.states = DenseMatrix::Zero(2, 3);
    b.states.row(0).setOnes();
    b.labels.assign(3, 1);
    const auto sep = separation_ratio({a, b}, 2);
    return std::make_pair(std::abs(sep.mean - 0.5) <= 1e-12,
                          "mean " + fmt(sep.mean));
  });

  check(out, "3-class separation matches a naive recomputation", [] {
    std::vector<ReservoirStates> seqs;
    for (int c = 0; c < 3; ++c)
      for (int s = 0; s < 2; ++s) {
        ReservoirStates st;
        st.states = random_pm1(3, 4, 620 + 10 * std::uint64_t(c) + s);
        st.labels.assign(4, c);
        seqs.push_back(std::move(st));
      }
    const auto got = separation_ratio(seqs, 3);

    double total = 0.0;
    for (Index t = 0; t < 4; ++t) {
      Vector means[3];
      for (int c = 0; c < 3; ++c) {
        means[c] = Vector::Zero(3);
        for (int s = 0; s < 2; ++s)
          means[c] += seqs[std::size_t(2 * c + s)].states.col(t);
        means[c] /= 2.0;
      }
      double d = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j) d += (means[k] - means[j]).norm();
      d /= 9.0;
      double v = 0.0;
      for (int c = 0; c < 3; ++c) {
        double within = 0.0;
        for (int s = 0; s < 2; ++s)
          within +=
              (seqs[std::size_t(2 * c + s)].states.col(t) - means[c]).norm();
        v += within / 2.0;
      }
      v /= 3.0;
      total += d / (1.0 + v);
    }
    const double want = total / 4.0;
    return std::make_pair(std::abs(got.mean - want) <= 1e-12,
                          "got " + fmt(got.mean) + ", naive " + fmt(want));
  });

  return out;
}

// --- csrecovery ----------------------------------------------------------------

std::vector<CheckResult> run_csrecovery_checks() {
  std::vector<CheckResult> out;

  check(out, "sparsity-0 signal is the zero vector", [] {
    RngStream rng({701, 0});
    const SparseSignal s = gen_sparse_signal(12, 0, rng);
    return std::make_pair(s.support.empty() && s.dense().norm() == 0.0,
                          std::to_string(s.support.size()) + " support entries");
  });

  check(out, "every signal magnitude is at least 1", [] {
    RngStream rng({702, 0});
    const SparseSignal s = gen_sparse_signal(60, 60, rng);
    double least = 1e300;
    for (double v : s.values) least = std::min(least, std::abs(v));
    return std::make_pair(least >= 1.0, "min magnitude " + fmt(least));
  });

  check(out, "mean signal magnitude over 1e5 draws near 1 + sqrt(2/pi)", [] {
    RngStream rng({703, 0});
    const SparseSignal s = gen_sparse_signal(100000, 100000, rng);
    double sum = 0.0;
    for (double v : s.values) sum += std::abs(v);
    const double mean = sum / 1e5;
    const double want = 1.0 + std::sqrt(2.0 / std::numbers::pi);
    return std::make_pair(std::abs(mean - want) <= 0.01,
                          "mean " + fmt(mean) + ", target " + fmt(want));
  });

  check(out, "noiseless observation of the zero signal is zero", [] {
    RngStream rng({704, 0});
    SparseSignal zero;
    zero.dimension = 8;
    const CsInstance inst =
        observe(zero, random_pm1(5, 8, 705), 1.0, 0.0, rng);
    return std::make_pair(inst.observations.norm() == 0.0,
                          "||y|| " + fmt(inst.observations.norm()));
  });

  check(out, "identity sensing at rho 2 doubles the signal", [] {
    RngStream rng({706, 0});
    const SparseSignal s = gen_sparse_signal(6, 3, rng);
    const CsInstance inst =
        observe(s, DenseMatrix::Identity(6, 6), 2.0, 0.0, rng);
    const double err = (inst.observations - 2.0 * s.dense()).cwiseAbs().maxCoeff();
    return std::make_pair(err == 0.0, "max deviation " + fmt(err));
  });

  check(out, "empirical noise variance over 1e6 draws within 2%", [] {
    RngStream rng({707, 0});
    SparseSignal zero;
    zero.dimension = 1;
    const double sigma = 0.7;
    const CsInstance inst =
        observe(zero, DenseMatrix::Zero(1000000, 1), 1.0, sigma, rng);
    const double mean = inst.observations.mean();
    const double var =
        (inst.observations.array() - mean).square().sum() / 1e6;
    const double target = sigma * sigma;
    return std::make_pair(std::abs(var - target) <= 0.02 * target,
                          "variance " + fmt(var) + ", target " + fmt(target));
  });

  check(out, "dantzig on zero observations returns zero", [] {
    RngStream rng({708, 0});
    SparseSignal zero;
    zero.dimension = 10;
    CsInstance inst = observe(zero, random_pm1(6, 10, 709), 1.0, 0.0, rng);
    const CsResult res = dantzig_select(inst, 1e-4, {});
    const double mx = res.estimate.cwiseAbs().maxCoeff();
    return std::make_pair(
        mx <= 1e-8 && res.solver_status == SolverStatus::Optimal,
        "max |estimate| " + fmt(mx) + ", status " +
            to_string(res.solver_status));
  });

  check(out, "dantzig with 5x5 identity sensing recovers a 1-sparse signal",
        [] {
          RngStream rng({710, 0});
          const SparseSignal s = gen_sparse_signal(5, 1, rng);
          CsInstance inst =
              observe(s, DenseMatrix::Identity(5, 5), 1.0, 0.0, rng);
          const CsResult res = dantzig_select(inst, 1e-8, {});
          const double err =
              (res.estimate - s.dense()).cwiseAbs().maxCoeff();
          return std::make_pair(err <= 1e-6, "max deviation " + fmt(err));
        });

  check(out, "dantzig 20x60 support matches the exhaustive 3-subset oracle",
        [] {
          WeightSpec spec;
          spec.gen = {GenTag::M2, 1.0};
          spec.rows = 20;
          spec.cols = 60;
          spec.seed = {711, 0};
          const DenseMatrix w = generate(spec);
          RngStream rng({712, 0});
          const SparseSignal s = gen_sparse_signal(60, 3, rng);
          CsInstance inst = observe(s, w, 1.0, 0.0, rng);
          const CsResult res = dantzig_select(inst, 1e-6, {});
          std::vector<Index> idx(60);
          for (Index j = 0; j < 60; ++j) idx[std::size_t(j)] = j;
          std::partial_sort(idx.begin(), idx.begin() + 3, idx.end(),
                            [&](Index a, Index b) {
                              return std::abs(res.estimate[a]) >
                                     std::abs(res.estimate[b]);
                            });
          std::vector<Index> got(idx.begin(), idx.begin() + 3);
          std::sort(got.begin(), got.end());
          const auto want =
              oracles::best_support_ref(w, inst.observations, 3);
          return std::make_pair(got == want,
                                "status " + std::string(to_string(
                                                res.solver_status)) +
                                    ", gap " + fmt(res.duality_gap));
        });

  check(out,
        "dantzig certification on 50 seeded 20x60 instances (>= 48 supports, "
        "gaps <= 1e-6)",
        [] {
          int matches = 0;
          int non_optimal = 0;
          double worst_gap = 0.0;
          for (std::uint64_t k = 0; k < 50; ++k) {
            WeightSpec spec;
            spec.gen = {GenTag::M2, 1.0};
            spec.rows = 20;
            spec.cols = 60;
            spec.seed = {9000 + k, 0};
            const DenseMatrix w = generate(spec);
            RngStream rng({9100 + k, 0});
            const SparseSignal s = gen_sparse_signal(60, 3, rng);
            CsInstance inst = observe(s, w, 1.0, 0.0, rng);
            const CsResult res = dantzig_select(inst, 1e-6, {});
            if (res.solver_status == SolverStatus::Optimal)
              worst_gap = std::max(worst_gap, res.duality_gap);
            else
              ++non_optimal;
            std::vector<Index> idx(60);
            for (Index j = 0; j < 60; ++j) idx[std::size_t(j)] = j;
            std::partial_sort(idx.begin(), idx.begin() + 3, idx.end(),
                              [&](Index a, Index b) {
                                return std::abs(res.estimate[a]) >
                                       std::abs(res.estimate[b]);
                              });
            std::vector<Index> got(idx.begin(), idx.begin() + 3);
            std::sort(got.begin(), got.end());
            if (got == oracles::best_support_ref(w, inst.observations, 3))
              ++matches;
          }
          const bool ok =
              matches >= 48 && worst_gap <= 1e-6 && non_optimal == 0;
          return std::make_pair(
              ok, std::to_string(matches) + "/50 supports, worst gap " +
                      fmt(worst_gap) + ", non-optimal " +
                      std::to_string(non_optimal));
        });

  check(out, "ideal mse of a perfect estimate is 0", [] {
    RngStream rng({713, 0});
    const SparseSignal s = gen_sparse_signal(30, 5, rng);
    const double m = ideal_mse(s, s.dense(), 0.05);
    return std::make_pair(m == 0.0, "mse " + fmt(m));
  });

  check(out, "ideal mse of the zero estimate on a small 1-sparse truth is 1",
        [] {
          SparseSignal s;
          s.dimension = 4;
          s.support = {2};
          s.values = {0.03};  // below sigma
          const double m = ideal_mse(s, Vector::Zero(4), 0.05);
          return std::make_pair(m == 1.0, "mse " + fmt(m));
        });

  check(out, "ideal mse matches a direct recomputation on an 800-dim instance",
        [] {
          RngStream rng({714, 0});
          const SparseSignal s = gen_sparse_signal(800, 30, rng);
          Vector est = s.dense();
          for (Index j = 0; j < est.size(); ++j)
            est[j] += 0.1 * rng.normal();
          const double sigma = 0.05;
          const double got = ideal_mse(s, est, sigma);
          const Vector truth = s.dense();
          double num = (truth - est).squaredNorm();
          double den = 0.0;
          for (Index j = 0; j < truth.size(); ++j)
            den += std::min(truth[j] * truth[j], sigma * sigma);
          const double want = std::sqrt(num / den);
          return std::make_pair(std::abs(got - want) <= 1e-12 * want,
                                "got " + fmt(got) + ", direct " + fmt(want));
        });

  return out;
}

// --- harness -------------------------------------------------------------------

namespace {

ExperimentConfig tiny_esn_grid() {
  ExperimentConfig cfg;
  cfg.mode = GridMode::EsnGrid;
  cfg.repetitions = 1;
  cfg.threads = 1;
  cfg.esn_nodes = 16;
  cfg.esn_period = 10;
  cfg.esn_repeats = 2;
  cfg.esn_nii_samples = 200;
  cfg.seed_value = 777;
  return cfg;
}

}  // namespace

std::vector<CheckResult> run_harness_checks() {
  std::vector<CheckResult> out;

  check(out, "single-cell grid produces one aggregate row", [] {
    ExperimentConfig cfg = tiny_esn_grid();
    cfg.methods = {GenTag::M1};
    cfg.scalings = {ScaleTag::R1};
    const GridResult res = run_esn_grid(cfg);
    const bool ok = res.rows.size() == 1 && res.rows[0].reps == 1 &&
                    res.rows[0].failures == 0;
    return std::make_pair(ok, std::to_string(res.rows.size()) + " rows, reps " +
                                  std::to_string(res.rows[0].reps));
  });

  check(out, "full 5x5 grid produces 25 aggregate rows", [] {
    const ExperimentConfig cfg = tiny_esn_grid();
    const GridResult res = run_esn_grid(cfg);
    int failures = 0;
    for (const auto& row : res.rows) failures += row.failures;
    return std::make_pair(res.rows.size() == 25,
                          std::to_string(res.rows.size()) + " rows, " +
                              std::to_string(failures) + " failed runs");
  });

  check(out, "noiseless cs smoke run recovers the signal through the grid",
        [] {
          ExperimentConfig cfg;
          cfg.mode = GridMode::CsGrid;
          cfg.methods = {GenTag::M2};
          cfg.scalings = {ScaleTag::R1};
          cfg.repetitions = 1;
          cfg.threads = 1;
          cfg.seed_value = 778;
          cfg.cs_n = 200;
          cfg.cs_m = 60;
          cfg.cs_s = 5;
          cfg.cs_noise = 0.0;
          cfg.cs_delta_policy = DeltaPolicy::Fixed;
          cfg.cs_delta = 1e-6;
          cfg.cs_rii_samples = 200;
          const GridResult res = run_cs_grid(cfg);
          if (res.rows.size() != 1 || res.rows[0].failures != 0)
            return std::make_pair(false, std::string("run failed: ") +
                                             (res.runs.empty()
                                                  ? "no runs"
                                                  : res.runs[0].status));
          double err = 0.0;
          for (const auto& p : res.scatter) {
            const double d = p.truth - p.estimate;
            err += d * d;
          }
          err = std::sqrt(err);
          return std::make_pair(err < 1e-4 && res.scatter.size() == 200,
                                "recovery error " + fmt(err));
        });

  check(out, "unscaled M3 interval endpoints grow with matrix size", [] {
    double prev_a = -1.0, prev_b = -1.0;
    std::string trace;
    for (Index n : {Index(50), Index(100), Index(200), Index(400)}) {
      WeightSpec spec;
      spec.gen = {GenTag::M3, 1.0};
      spec.rows = n;
      spec.cols = n;
      spec.seed = {801, std::uint64_t(n)};
      const DenseMatrix w = generate(spec);
      RngStream rng({802, std::uint64_t(n)});
      const auto iv = estimate_nii(w, 1.0, 2000, rng);
      if (!(iv.lower > prev_a && iv.upper > prev_b))
        return std::make_pair(false, "not monotone at n = " +
                                         std::to_string(n));
      prev_a = iv.lower;
      prev_b = iv.upper;
      trace += " [" + fmt(iv.lower) + "," + fmt(iv.upper) + "]";
    }
    return std::make_pair(true, "endpoints" + trace);
  });

  check(out, "identity debug generator reports a = b = rho per run", [] {
    ExperimentConfig cfg;
    cfg.mode = GridMode::IsometrySweep;
    cfg.methods = {GenTag::Identity};
    cfg.scalings = {ScaleTag::R1, ScaleTag::R2, ScaleTag::R5};
    cfg.repetitions = 2;
    cfg.threads = 1;
    cfg.iso_sizes = {12};
    cfg.iso_samples = 50;
    const GridResult res = run_isometry_sweep(cfg);
    for (const auto& rec : res.runs) {
      if (rec.failed) return std::make_pair(false, rec.status);
      double rho = 0, a = 0, b = 0;
      for (const auto& [k, v] : rec.metrics) {
        if (k == "rho") rho = v;
        if (k == "nii_a") a = v;
        if (k == "nii_b") b = v;
      }
      if (a != rho || b != rho)
        return std::make_pair(false, rec.method + "/" + rec.scaling +
                                         ": a " + fmt(a) + ", b " + fmt(b) +
                                         ", rho " + fmt(rho));
    }
    return std::make_pair(true,
                          std::to_string(res.runs.size()) + " runs exact");
  });

  check(out, "empty result emits a header-only csv", [] {
    GridResult res;
    res.mode = GridMode::EsnGrid;
    ExperimentConfig cfg = tiny_esn_grid();
    cfg.out_dir = fresh_tmp_dir("empty");
    emit_results(res, cfg);
    std::ifstream in(cfg.out_dir / "esn_grid.csv");
    std::string line;
    int lines = 0;
    std::string first;
    while (std::getline(in, line))
      if (++lines == 1) first = line;
    const bool ok = lines == 1 && first == "method,scaling,reps,failures";
    return std::make_pair(ok, std::to_string(lines) + " line(s): " + first);
  });

  check(out, "one-row result emits a two-line csv", [] {
    ExperimentConfig cfg = tiny_esn_grid();
    cfg.methods = {GenTag::M2};
    cfg.scalings = {ScaleTag::R5};
    cfg.out_dir = fresh_tmp_dir("onerow");
    const GridResult res = run_esn_grid(cfg);
    emit_results(res, cfg);
    std::ifstream in(cfg.out_dir / "esn_grid.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    return std::make_pair(lines == 2, std::to_string(lines) + " lines");
  });

  check(out, "emitted json round-trips every aggregate value", [] {
    ExperimentConfig cfg = tiny_esn_grid();
    cfg.methods = {GenTag::M1, GenTag::M3};
    cfg.scalings = {ScaleTag::R1, ScaleTag::R3};
    cfg.out_dir = fresh_tmp_dir("roundtrip");
    const GridResult res = run_esn_grid(cfg);
    emit_results(res, cfg);
    std::ifstream in(cfg.out_dir / "esn_grid.json");
    const auto doc = nlohmann::ordered_json::parse(in);
    const auto& rows = doc.at("rows");
    if (rows.size() != res.rows.size())
      return std::make_pair(false, std::string("row count mismatch"));
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const auto& want = res.rows[i];
      const auto& got = rows.at(i);
      if (got.at("method").get<std::string>() != want.method ||
          got.at("scaling").get<std::string>() != want.scaling ||
          got.at("reps").get<int>() != want.reps ||
          got.at("failures").get<int>() != want.failures)
        return std::make_pair(false, "row " + std::to_string(i) + " identity");
      for (const auto& [name, v] : want.columns)
        if (got.at(name).get<double>() != v)
          return std::make_pair(false,
                                "row " + std::to_string(i) + " column " + name);
    }
    return std::make_pair(true,
                          std::to_string(res.rows.size()) + " rows identical");
  });

  return out;
}

std::vector<CheckResult> run_all_checks() {
  std::vector<CheckResult> all;
  for (auto* suite :
       {run_numerics_checks, run_ensemble_checks, run_isometry_checks,
        run_dataset_checks, run_esn_checks, run_csrecovery_checks,
        run_harness_checks}) {
    auto part = suite();
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return all;
}

}  // namespace isolab
