#include "isolab/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace isolab {

using ordered_json = nlohmann::ordered_json;

const char* to_string(GridMode m) {
  switch (m) {
    case GridMode::EsnGrid: return "esn_grid";
    case GridMode::CsGrid: return "cs_grid";
    case GridMode::IsometrySweep: return "isometry";
  }
  return "unknown";
}

double AggregateRow::value(const std::string& name) const {
  for (const auto& [k, v] : columns)
    if (k == name) return v;
  throw ValidationError("AggregateRow: no column named '" + name + "'");
}

// --- config parsing ---------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ValidationError("config key '" + key +
                          "' expects an unsigned integer, got '" + v + "'");
  return out;
}

int parse_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ValidationError("config key '" + key + "' expects an integer, got '" +
                          v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw ValidationError("config key '" + key + "' expects a number, got '" +
                          v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ValidationError("config key '" + key + "' expects true/false, got '" +
                        v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<GenTag> parse_methods(const std::string& key,
                                  const std::string& v) {
  std::vector<GenTag> out;
  for (const auto& item : split_list(v)) out.push_back(gen_tag_from_string(item));
  if (out.empty())
    throw ValidationError("config key '" + key + "' lists no methods");
  return out;
}

std::vector<ScaleTag> parse_scalings(const std::string& key,
                                     const std::string& v) {
  std::vector<ScaleTag> out;
  for (const auto& item : split_list(v))
    out.push_back(scale_tag_from_string(item));
  if (out.empty())
    throw ValidationError("config key '" + key + "' lists no scalings");
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{})
    throw IoError("format_double: conversion failed");
  return std::string(buf, ptr);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(
    std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected 'key = value', got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": empty key");
    if (!seen.insert(key).second)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": duplicate key '" + key + "'");
    out.emplace_back(key, value);
  }
  return out;
}

void apply_key_values(
    ExperimentConfig& cfg,
    const std::vector<std::pair<std::string, std::string>>& kvs) {
  const bool esn_mode = cfg.mode == GridMode::EsnGrid;
  for (const auto& [key, value] : kvs) {
    // Generic namespaces.
    if (key == "rng.seed") {
      cfg.seed_value = parse_u64(key, value);
    } else if (key == "rng.stream") {
      cfg.seed_stream = parse_u64(key, value);
    } else if (key == "out.dir") {
      cfg.out_dir = value;
    } else if (key == "out.formats") {
      cfg.out_csv = false;
      cfg.out_json = false;
      for (const auto& f : split_list(value)) {
        if (f == "csv")
          cfg.out_csv = true;
        else if (f == "json")
          cfg.out_json = true;
        else
          throw ValidationError("config key 'out.formats': unknown format '" +
                                f + "' (expected csv,json)");
      }
      // esn namespace
    } else if (key == "esn.methods") {
      if (esn_mode) cfg.methods = parse_methods(key, value);
    } else if (key == "esn.scalings") {
      if (esn_mode) cfg.scalings = parse_scalings(key, value);
    } else if (key == "esn.reps") {
      if (esn_mode) cfg.repetitions = parse_int(key, value);
    } else if (key == "esn.n") {
      cfg.esn_nodes = parse_int(key, value);
    } else if (key == "esn.period") {
      cfg.esn_period = parse_int(key, value);
    } else if (key == "esn.repeats") {
      cfg.esn_repeats = parse_int(key, value);
    } else if (key == "esn.sequences_per_class") {
      cfg.esn_per_class = parse_int(key, value);
    } else if (key == "esn.noise_sigma") {
      cfg.esn_noise = parse_real(key, value);
    } else if (key == "esn.noise_as_variance") {
      cfg.esn_noise_as_variance = parse_bool(key, value);
    } else if (key == "esn.leak") {
      cfg.esn_leak = parse_real(key, value);
    } else if (key == "esn.input_scale") {
      cfg.esn_input_scale = parse_real(key, value);
    } else if (key == "esn.bias") {
      cfg.esn_bias = parse_real(key, value);
    } else if (key == "esn.activation") {
      cfg.esn_activation = activation_from_string(value);
    } else if (key == "esn.lambda") {
      if (value == "auto")
        cfg.esn_lambda.reset();
      else
        cfg.esn_lambda = parse_real(key, value);
    } else if (key == "esn.washout") {
      cfg.esn_washout = parse_int(key, value);
    } else if (key == "esn.sparsity") {
      cfg.esn_sparsity = parse_real(key, value);
    } else if (key == "esn.nii_samples") {
      cfg.esn_nii_samples = parse_int(key, value);
    } else if (key == "esn.accuracy") {
      if (value == "held-out")
        cfg.esn_accuracy = AccSource::HeldOut;
      else if (value == "train")
        cfg.esn_accuracy = AccSource::Train;
      else
        throw ValidationError(
            "config key 'esn.accuracy' expects held-out or train");
    } else if (key == "esn.phase") {
      cfg.esn_phase = parse_real(key, value);
    } else if (key == "esn.dump_datasets") {
      cfg.esn_dump_datasets = parse_bool(key, value);
      // cs namespace
    } else if (key == "cs.methods") {
      if (!esn_mode) cfg.methods = parse_methods(key, value);
    } else if (key == "cs.scalings") {
      if (!esn_mode) cfg.scalings = parse_scalings(key, value);
    } else if (key == "cs.reps") {
      if (!esn_mode) cfg.repetitions = parse_int(key, value);
    } else if (key == "cs.n") {
      cfg.cs_n = parse_int(key, value);
    } else if (key == "cs.m") {
      cfg.cs_m = parse_int(key, value);
    } else if (key == "cs.s") {
      cfg.cs_s = parse_int(key, value);
    } else if (key == "cs.noise_sigma") {
      cfg.cs_noise = parse_real(key, value);
    } else if (key == "cs.noise_as_variance") {
      cfg.cs_noise_as_variance = parse_bool(key, value);
    } else if (key == "cs.delta_policy") {
      if (value == "universal")
        cfg.cs_delta_policy = DeltaPolicy::Universal;
      else if (value == "sigma")
        cfg.cs_delta_policy = DeltaPolicy::SigmaMultiple;
      else if (value == "fixed")
        cfg.cs_delta_policy = DeltaPolicy::Fixed;
      else
        throw ValidationError(
            "config key 'cs.delta_policy' expects universal, sigma, or fixed");
    } else if (key == "cs.delta") {
      cfg.cs_delta = parse_real(key, value);
    } else if (key == "cs.refit") {
      cfg.cs_refit = parse_bool(key, value);
    } else if (key == "cs.constraint") {
      cfg.cs_constraint = constraint_form_from_string(value);
    } else if (key == "cs.r4") {
      if (value == "R5")
        cfg.cs_r4 = R4Handling::AsR5;
      else if (value == "R4strict")
        cfg.cs_r4 = R4Handling::Strict;
      else
        throw ValidationError("config key 'cs.r4' expects R5 or R4strict");
    } else if (key == "cs.density") {
      cfg.cs_density = parse_real(key, value);
    } else if (key == "cs.nii_samples") {
      cfg.cs_nii_samples = parse_int(key, value);
    } else if (key == "cs.rii_samples") {
      cfg.cs_rii_samples = parse_int(key, value);
    } else if (key == "cs.rii_sparsity") {
      cfg.cs_rii_sparsity = parse_int(key, value);
    } else if (key == "cs.max_iterations") {
      cfg.cs_max_iterations = parse_int(key, value);
    } else if (key == "cs.tolerance") {
      cfg.cs_tolerance = parse_real(key, value);
    } else if (key == "cs.scatter") {
      cfg.cs_scatter = parse_bool(key, value);
    } else {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw ValidationError("config: no methods selected");
  if (cfg.scalings.empty())
    throw ValidationError("config: no scalings selected");
  if (cfg.repetitions < 1)
    throw ValidationError("config: repetitions must be >= 1");
  if (cfg.threads < 0) throw ValidationError("config: threads must be >= 0");
  if (!cfg.out_csv && !cfg.out_json)
    throw ValidationError("config: out.formats selects neither csv nor json");
  switch (cfg.mode) {
    case GridMode::EsnGrid:
      if (cfg.esn_nodes < 1) throw ValidationError("config: esn.n must be >= 1");
      if (cfg.esn_period < 2)
        throw ValidationError("config: esn.period must be >= 2");
      if (cfg.esn_repeats < 1)
        throw ValidationError("config: esn.repeats must be >= 1");
      if (cfg.esn_per_class < 1)
        throw ValidationError("config: esn.sequences_per_class must be >= 1");
      if (!(cfg.esn_noise >= 0))
        throw ValidationError("config: esn.noise_sigma must be >= 0");
      if (!(cfg.esn_leak >= 0 && cfg.esn_leak <= 1))
        throw ValidationError("config: esn.leak must lie in [0, 1]");
      if (!(cfg.esn_input_scale > 0))
        throw ValidationError("config: esn.input_scale must be > 0");
      if (cfg.esn_lambda && !(*cfg.esn_lambda >= 0))
        throw ValidationError("config: esn.lambda must be >= 0 or auto");
      if (cfg.esn_washout < 0 ||
          cfg.esn_washout >= cfg.esn_period * cfg.esn_repeats)
        throw ValidationError("config: esn.washout must lie in [0, T)");
      if (!(cfg.esn_sparsity > 0 && cfg.esn_sparsity <= 1))
        throw ValidationError("config: esn.sparsity must lie in (0, 1]");
      if (cfg.esn_nii_samples < 1)
        throw ValidationError("config: esn.nii_samples must be >= 1");
      break;
    case GridMode::CsGrid:
      if (cfg.cs_n < 1 || cfg.cs_m < 1)
        throw ValidationError("config: cs.n and cs.m must be >= 1");
      if (cfg.cs_s < 0 || cfg.cs_s > cfg.cs_n)
        throw ValidationError("config: cs.s must lie in [0, cs.n]");
      if (!(cfg.cs_noise >= 0))
        throw ValidationError("config: cs.noise_sigma must be >= 0");
      if (!(cfg.cs_delta > 0))
        throw ValidationError("config: cs.delta must be > 0");
      if (!(cfg.cs_density > 0 && cfg.cs_density <= 1))
        throw ValidationError("config: cs.density must lie in (0, 1]");
      if (cfg.cs_nii_samples < 1 || cfg.cs_rii_samples < 1)
        throw ValidationError("config: cs sample counts must be >= 1");
      if (cfg.cs_rii_sparsity < 0 || cfg.cs_rii_sparsity > cfg.cs_n)
        throw ValidationError("config: cs.rii_sparsity must lie in [0, cs.n]");
      if (cfg.cs_max_iterations < 1)
        throw ValidationError("config: cs.max_iterations must be >= 1");
      if (!(cfg.cs_tolerance > 0))
        throw ValidationError("config: cs.tolerance must be > 0");
      for (ScaleTag s : cfg.scalings)
        if (s == ScaleTag::R3)
          throw ValidationError(
              "config: R3 requires a square matrix and does not apply to the "
              "cs grid (M x N sensing)");
      break;
    case GridMode::IsometrySweep:
      if (cfg.iso_sizes.empty())
        throw ValidationError("config: isometry sweep needs at least one size");
      for (Index n : cfg.iso_sizes)
        if (n < 1)
          throw ValidationError("config: isometry sizes must be >= 1");
      if (cfg.iso_samples < 1)
        throw ValidationError("config: isometry samples must be >= 1");
      if (!(cfg.esn_sparsity > 0 && cfg.esn_sparsity <= 1))
        throw ValidationError("config: sparsity must lie in (0, 1]");
      break;
  }
}

ExperimentConfig load_config(const std::filesystem::path& path, GridMode mode) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  ExperimentConfig cfg;
  cfg.mode = mode;
  if (mode == GridMode::CsGrid) {
    // Desk-scale default grid for sensing matrices: R3/R4 need square.
    cfg.scalings = {ScaleTag::R1, ScaleTag::R2, ScaleTag::R4, ScaleTag::R5};
  }
  apply_key_values(cfg, parse_key_values(in));
  validate_config(cfg);
  return cfg;
}

double effective_sigma(double value, bool as_variance) {
  if (!(value >= 0) || !std::isfinite(value))
    throw ValidationError("noise level must be finite and >= 0");
  return as_variance ? std::sqrt(value) : value;
}

int resolve_threads(int requested) {
  int n = requested;
  if (n <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    n = hw > 0 ? static_cast<int>(hw) : 1;
  }
  if (const char* env = std::getenv("ISOLAB_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) n = std::min(n, cap);
    } catch (...) {
      throw ValidationError("ISOLAB_THREADS is not an integer");
    }
  }
  return std::max(1, n);
}

// --- execution --------------------------------------------------------------

namespace {

enum class Purpose : std::uint64_t {
  WeightGen = 1,
  ScaleEstimate = 2,
  TrainData = 3,
  TestData = 4,
  NiiEstimate = 5,
  CsSignal = 6,
  CsNoise = 7,
  RiiEstimate = 8,
};

// Disjoint bit fields keep substreams pairwise distinct within a grid run;
// the user's base stream is folded in by xor.
std::uint64_t substream(std::uint64_t base, int mi, int ni, int ri, int rep,
                        Purpose p) {
  return base ^ ((std::uint64_t(mi + 1) << 56) | (std::uint64_t(ni + 1) << 48) |
                 (std::uint64_t(ri + 1) << 40) |
                 ((std::uint64_t(rep) + 1) << 8) | std::uint64_t(p));
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(err_mutex);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

double metric_value(const RunRecord& rec, const std::string& name) {
  for (const auto& [k, v] : rec.metrics)
    if (k == name) return v;
  throw ValidationError("run record lacks metric '" + name + "'");
}

// Slot-ordered mean/std reduction; identical arithmetic regardless of the
// thread count that produced the records.
std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records,
                                    int reps,
                                    const std::vector<std::string>& metrics,
                                    bool with_size) {
  if (reps < 1) throw ValidationError("aggregate: reps must be >= 1");
  if (records.size() % static_cast<std::size_t>(reps) != 0)
    throw ValidationError("aggregate: record count not divisible by reps");
  const std::size_t n_groups = records.size() / static_cast<std::size_t>(reps);
  std::vector<AggregateRow> rows;
  rows.reserve(n_groups);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t g = 0; g < n_groups; ++g) {
    const RunRecord* group = &records[g * static_cast<std::size_t>(reps)];
    AggregateRow row;
    row.method = group[0].method;
    row.scaling = group[0].scaling;
    std::vector<const RunRecord*> done;
    for (int r = 0; r < reps; ++r) {
      if (group[r].failed)
        ++row.failures;
      else
        done.push_back(&group[r]);
    }
    row.reps = static_cast<int>(done.size());
    auto mean_of = [&](const std::string& name) {
      if (done.empty()) return nan;
      double sum = 0.0;
      for (const RunRecord* rec : done) sum += metric_value(*rec, name);
      return sum / double(done.size());
    };
    auto std_of = [&](const std::string& name, double mean) {
      if (done.empty()) return nan;
      if (done.size() == 1) return 0.0;
      double ss = 0.0;
      for (const RunRecord* rec : done) {
        const double d = metric_value(*rec, name) - mean;
        ss += d * d;
      }
      return std::sqrt(ss / double(done.size() - 1));
    };
    for (const auto& name : metrics) {
      if (name == "nii_a" || name == "nii_b") continue;
      const double m = mean_of(name);
      row.columns.emplace_back(name + "_mean", m);
      row.columns.emplace_back(name + "_std", std_of(name, m));
    }
    if (with_size) row.columns.emplace_back("n", double(group[0].size));
    row.columns.emplace_back("a_mean", mean_of("nii_a"));
    row.columns.emplace_back("b_mean", mean_of("nii_b"));
    rows.push_back(std::move(row));
  }
  return rows;
}

const std::vector<std::string> kEsnMetrics = {
    "rho",       "acc",  "acc_sine", "acc_square", "train_acc",
    "srad",      "sep",  "nii_a",    "nii_b"};
const std::vector<std::string> kCsMetrics = {"rho", "mse", "iters", "nii_a",
                                             "nii_b"};
const std::vector<std::string> kSweepMetrics = {"rho", "nii_a", "nii_b"};

struct DrivenStates {
  ReservoirStates all;
  std::vector<ReservoirStates> per_sequence;
};

DrivenStates drive(const EsnConfig& ec, const WaveDataset& ds,
                   const DenseMatrix& w_scaled) {
  DrivenStates out;
  const Index t_cols =
      Index(ds.period) * Index(ds.repeats) - Index(ec.washout);
  const Index n_seq = static_cast<Index>(ds.sequences.size());
  out.all.states.resize(ec.n_nodes, t_cols * n_seq);
  out.all.labels.reserve(static_cast<std::size_t>(t_cols * n_seq));
  out.per_sequence.reserve(ds.sequences.size());
  for (Index i = 0; i < n_seq; ++i) {
    const auto& seq = ds.sequences[static_cast<std::size_t>(i)];
    ReservoirStates st = run_reservoir(ec, seq.input, w_scaled);
    st.labels.assign(static_cast<std::size_t>(t_cols), seq.label);
    out.all.states.middleCols(i * t_cols, t_cols) = st.states;
    out.all.labels.insert(out.all.labels.end(),
                          static_cast<std::size_t>(t_cols), seq.label);
    out.per_sequence.push_back(std::move(st));
  }
  return out;
}

DenseMatrix one_hot(const std::vector<int>& labels, int k) {
  DenseMatrix t = DenseMatrix::Zero(k, static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i)
    t(labels[i], static_cast<Index>(i)) = 1.0;
  return t;
}

double max_column_norm(const DenseMatrix& m) {
  double best = 0.0;
  for (Index j = 0; j < m.cols(); ++j) best = std::max(best, m.col(j).norm());
  return best;
}

}  // namespace

GridResult run_esn_grid(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const int nm = static_cast<int>(cfg.methods.size());
  const int nr = static_cast<int>(cfg.scalings.size());
  const int reps = cfg.repetitions;
  const double sigma = effective_sigma(cfg.esn_noise, cfg.esn_noise_as_variance);

  GridResult result;
  result.mode = GridMode::EsnGrid;
  result.runs.resize(static_cast<std::size_t>(nm) * nr * reps);

  parallel_for(
      static_cast<int>(result.runs.size()), resolve_threads(cfg.threads),
      [&](int task) {
        const int mi = task / (nr * reps);
        const int ri = (task / reps) % nr;
        const int rep = task % reps;
        RunRecord& rec = result.runs[static_cast<std::size_t>(task)];
        rec.method = to_string(cfg.methods[static_cast<std::size_t>(mi)]);
        rec.scaling = to_string(cfg.scalings[static_cast<std::size_t>(ri)]);
        rec.rep = rep;
        auto stream = [&](Purpose p) {
          return Seed{cfg.seed_value,
                      substream(cfg.seed_stream, mi, 0, ri, rep, p)};
        };
        try {
          WeightSpec ws;
          ws.gen = {cfg.methods[static_cast<std::size_t>(mi)],
                    cfg.esn_sparsity};
          ws.scale = {cfg.scalings[static_cast<std::size_t>(ri)],
                      cfg.esn_nii_samples};
          ws.rows = cfg.esn_nodes;
          ws.cols = cfg.esn_nodes;
          ws.seed = stream(Purpose::WeightGen);
          const DenseMatrix w = generate(ws);
          RngStream scale_rng(stream(Purpose::ScaleEstimate));
          const double rho = scale_factor(ws.scale, w, scale_rng);
          const DenseMatrix w_scaled = rho * w;

          EsnConfig ec;
          ec.n_nodes = cfg.esn_nodes;
          ec.leak = cfg.esn_leak;
          ec.input_scale = cfg.esn_input_scale;
          ec.bias = cfg.esn_bias;
          ec.activation = cfg.esn_activation;
          ec.weight_spec = ws;
          ec.input_weights = DenseMatrix::Ones(cfg.esn_nodes, 1);
          ec.ridge_lambda = cfg.esn_lambda;
          ec.washout = cfg.esn_washout;

          RngStream train_rng(stream(Purpose::TrainData));
          const WaveDataset train =
              gen_wave_dataset(cfg.esn_period, cfg.esn_repeats,
                               cfg.esn_per_class, sigma, train_rng,
                               cfg.esn_phase);
          const DrivenStates tr = drive(ec, train, w_scaled);
          const double lambda = cfg.esn_lambda.value_or(
              1e-6 * tr.all.states.squaredNorm() / double(cfg.esn_nodes));
          const Readout readout =
              train_readout(tr.all, one_hot(tr.all.labels, 2), lambda);
          const AccuracyReport train_rep =
              accuracy(classify_pointwise(readout, tr.all), tr.all.labels, 2);

          RngStream test_rng(stream(Purpose::TestData));
          const WaveDataset test =
              gen_wave_dataset(cfg.esn_period, cfg.esn_repeats,
                               cfg.esn_per_class, sigma, test_rng,
                               cfg.esn_phase);
          const DrivenStates te = drive(ec, test, w_scaled);
          const AccuracyReport test_rep =
              accuracy(classify_pointwise(readout, te.all), te.all.labels, 2);

          const bool held_out = cfg.esn_accuracy == AccSource::HeldOut;
          const AccuracyReport& head = held_out ? test_rep : train_rep;
          const SeparationResult sep =
              separation_ratio(held_out ? te.per_sequence : tr.per_sequence, 2);
          const double srad = spectral_radius(w_scaled);
          RngStream nii_rng(stream(Purpose::NiiEstimate));
          const IsometryInterval nii =
              estimate_nii(w, rho, cfg.esn_nii_samples, nii_rng);

          const double nan = std::numeric_limits<double>::quiet_NaN();
          rec.metrics = {
              {"rho", rho},
              {"acc", head.overall},
              {"acc_sine", head.per_class[0].value_or(nan)},
              {"acc_square", head.per_class[1].value_or(nan)},
              {"train_acc", train_rep.overall},
              {"srad", srad},
              {"sep", sep.mean},
              {"nii_a", nii.lower},
              {"nii_b", nii.upper},
          };
          rec.status = "ok";

          if (cfg.esn_dump_datasets && rep == 0) {
            const auto base = cfg.out_dir / "datasets" /
                              (rec.method + "_" + rec.scaling);
            save_wave_dataset(train, base / "train");
            save_wave_dataset(test, base / "test");
          }
        } catch (const Error& e) {
          rec.failed = true;
          rec.status = std::string("failed: ") + e.what();
        }
      });

  result.rows = aggregate(result.runs, reps, kEsnMetrics, /*with_size=*/false);
  return result;
}

GridResult run_cs_grid(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const int nm = static_cast<int>(cfg.methods.size());
  const int nr = static_cast<int>(cfg.scalings.size());
  const int reps = cfg.repetitions;
  const double sigma = effective_sigma(cfg.cs_noise, cfg.cs_noise_as_variance);
  const Index rii_s = cfg.cs_rii_sparsity > 0 ? cfg.cs_rii_sparsity : cfg.cs_s;

  GridResult result;
  result.mode = GridMode::CsGrid;
  result.runs.resize(static_cast<std::size_t>(nm) * nr * reps);
  std::vector<std::vector<ScatterPoint>> scatter_slots(
      static_cast<std::size_t>(nm) * nr);

  parallel_for(
      static_cast<int>(result.runs.size()), resolve_threads(cfg.threads),
      [&](int task) {
        const int mi = task / (nr * reps);
        const int ri = (task / reps) % nr;
        const int rep = task % reps;
        RunRecord& rec = result.runs[static_cast<std::size_t>(task)];
        const GenTag method = cfg.methods[static_cast<std::size_t>(mi)];
        const ScaleTag requested = cfg.scalings[static_cast<std::size_t>(ri)];
        rec.method = to_string(method);
        rec.scaling = to_string(requested);  // label the rule as requested,
                                             // even when R4 maps onto R5
        rec.rep = rep;
        auto stream = [&](Purpose p) {
          return Seed{cfg.seed_value,
                      substream(cfg.seed_stream, mi, 0, ri, rep, p)};
        };
        try {
          ScaleTag effective = requested;
          if (requested == ScaleTag::R4 && cfg.cs_r4 == R4Handling::AsR5)
            effective = ScaleTag::R5;
          WeightSpec ws;
          ws.gen = {method, cfg.cs_density};
          ws.scale = {effective, cfg.cs_nii_samples};
          ws.rows = cfg.cs_m;
          ws.cols = cfg.cs_n;
          ws.seed = stream(Purpose::WeightGen);
          const DenseMatrix w = generate(ws);
          RngStream scale_rng(stream(Purpose::ScaleEstimate));
          const double rho = scale_factor(ws.scale, w, scale_rng);

          RngStream signal_rng(stream(Purpose::CsSignal));
          const SparseSignal signal =
              gen_sparse_signal(cfg.cs_n, cfg.cs_s, signal_rng);
          RngStream noise_rng(stream(Purpose::CsNoise));
          const CsInstance inst = observe(signal, w, rho, sigma, noise_rng);

          double delta = cfg.cs_delta;
          if (cfg.cs_delta_policy == DeltaPolicy::SigmaMultiple) {
            delta = cfg.cs_delta * sigma;
          } else if (cfg.cs_delta_policy == DeltaPolicy::Universal) {
            delta = cfg.cs_delta * sigma *
                    std::sqrt(2.0 * std::log(double(cfg.cs_n))) * rho *
                    max_column_norm(w);
          }
          if (!(delta > 0) || !std::isfinite(delta))
            throw ValidationError(
                "cs delta policy produced a non-positive delta; use "
                "cs.delta_policy = fixed for noiseless runs");

          DantzigOptions opts;
          opts.form = cfg.cs_constraint;
          opts.max_iterations = cfg.cs_max_iterations;
          opts.tolerance = cfg.cs_tolerance;
          CsResult res = dantzig_select(inst, delta, opts);
          if (cfg.cs_refit) res.estimate = refit_on_support(inst, res.estimate);
          try {
            res.mse = ideal_mse(signal, res.estimate, sigma);
          } catch (const DegenerateError&) {
            // sigma = 0 zeroes the denominator: the error measure is
            // undefined there, but the recovery itself is still valid.
            res.mse = std::numeric_limits<double>::quiet_NaN();
          }

          RngStream rii_rng(stream(Purpose::RiiEstimate));
          const IsometryInterval rii =
              estimate_rii(w, rho, rii_s, cfg.cs_rii_samples, rii_rng);

          rec.metrics = {
              {"rho", rho},          {"mse", res.mse},
              {"iters", double(res.iterations)},
              {"nii_a", rii.lower},  {"nii_b", rii.upper},
          };
          rec.status = to_string(res.solver_status);

          if (cfg.cs_scatter && rep == 0) {
            auto& pts = scatter_slots[static_cast<std::size_t>(mi * nr + ri)];
            const Vector truth = signal.dense();
            pts.reserve(static_cast<std::size_t>(cfg.cs_n));
            for (Index j = 0; j < cfg.cs_n; ++j)
              pts.push_back({rec.method, rec.scaling, j, truth[j],
                             res.estimate[j]});
          }
        } catch (const Error& e) {
          rec.failed = true;
          rec.status = std::string("failed: ") + e.what();
        }
      });

  for (auto& pts : scatter_slots)
    result.scatter.insert(result.scatter.end(), pts.begin(), pts.end());
  result.rows = aggregate(result.runs, reps, kCsMetrics, /*with_size=*/false);
  return result;
}

GridResult run_isometry_sweep(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const int nm = static_cast<int>(cfg.methods.size());
  const int ns = static_cast<int>(cfg.iso_sizes.size());
  const int nr = static_cast<int>(cfg.scalings.size());
  const int reps = cfg.repetitions;

  GridResult result;
  result.mode = GridMode::IsometrySweep;
  result.runs.resize(static_cast<std::size_t>(nm) * ns * nr * reps);

  parallel_for(
      static_cast<int>(result.runs.size()), resolve_threads(cfg.threads),
      [&](int task) {
        const int mi = task / (ns * nr * reps);
        const int ni = (task / (nr * reps)) % ns;
        const int ri = (task / reps) % nr;
        const int rep = task % reps;
        RunRecord& rec = result.runs[static_cast<std::size_t>(task)];
        const Index n = cfg.iso_sizes[static_cast<std::size_t>(ni)];
        rec.method = to_string(cfg.methods[static_cast<std::size_t>(mi)]);
        rec.scaling = to_string(cfg.scalings[static_cast<std::size_t>(ri)]);
        rec.size = n;
        rec.rep = rep;
        auto stream = [&](Purpose p) {
          return Seed{cfg.seed_value,
                      substream(cfg.seed_stream, mi, ni, ri, rep, p)};
        };
        try {
          WeightSpec ws;
          ws.gen = {cfg.methods[static_cast<std::size_t>(mi)],
                    cfg.esn_sparsity};
          ws.scale = {cfg.scalings[static_cast<std::size_t>(ri)],
                      cfg.iso_samples};
          ws.rows = n;
          ws.cols = n;
          ws.seed = stream(Purpose::WeightGen);
          const DenseMatrix w = generate(ws);
          RngStream scale_rng(stream(Purpose::ScaleEstimate));
          const double rho = scale_factor(ws.scale, w, scale_rng);
          RngStream nii_rng(stream(Purpose::NiiEstimate));
          const IsometryInterval nii =
              estimate_nii(w, rho, cfg.iso_samples, nii_rng);
          rec.metrics = {
              {"rho", rho}, {"nii_a", nii.lower}, {"nii_b", nii.upper}};
          rec.status = "ok";
        } catch (const Error& e) {
          rec.failed = true;
          rec.status = std::string("failed: ") + e.what();
        }
      });

  result.rows = aggregate(result.runs, reps, kSweepMetrics, /*with_size=*/true);
  return result;
}

GridResult run_grid(const ExperimentConfig& cfg) {
  switch (cfg.mode) {
    case GridMode::EsnGrid: return run_esn_grid(cfg);
    case GridMode::CsGrid: return run_cs_grid(cfg);
    case GridMode::IsometrySweep: return run_isometry_sweep(cfg);
  }
  throw ValidationError("run_grid: unknown mode");
}

// --- emission ---------------------------------------------------------------

namespace {

bool same_double_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

void check_self_consistency(const GridResult& result, int reps) {
  const std::vector<std::string>* names = nullptr;
  bool with_size = false;
  switch (result.mode) {
    case GridMode::EsnGrid: names = &kEsnMetrics; break;
    case GridMode::CsGrid: names = &kCsMetrics; break;
    case GridMode::IsometrySweep:
      names = &kSweepMetrics;
      with_size = true;
      break;
  }
  const auto recomputed = aggregate(result.runs, reps, *names, with_size);
  if (recomputed.size() != result.rows.size())
    throw NumericalError("emit_results: aggregate row count drifted");
  for (std::size_t i = 0; i < recomputed.size(); ++i) {
    const auto& a = recomputed[i];
    const auto& b = result.rows[i];
    bool ok = a.method == b.method && a.scaling == b.scaling &&
              a.reps == b.reps && a.failures == b.failures &&
              a.columns.size() == b.columns.size();
    for (std::size_t c = 0; ok && c < a.columns.size(); ++c)
      ok = a.columns[c].first == b.columns[c].first &&
           same_double_bits(a.columns[c].second, b.columns[c].second);
    if (!ok)
      throw NumericalError(
          "emit_results: aggregates disagree with raw run records (row " +
          std::to_string(i) + ")");
  }
}

ordered_json metadata_json(const ExperimentConfig& cfg) {
  ordered_json meta;
  meta["mode"] = to_string(cfg.mode);
  meta["seed"] = {{"value", cfg.seed_value}, {"stream", cfg.seed_stream}};
  meta["repetitions"] = cfg.repetitions;
  std::vector<std::string> methods, scalings;
  for (GenTag m : cfg.methods) methods.emplace_back(to_string(m));
  for (ScaleTag s : cfg.scalings) scalings.emplace_back(to_string(s));
  meta["methods"] = methods;
  meta["scalings"] = scalings;
  switch (cfg.mode) {
    case GridMode::EsnGrid: {
      ordered_json e;
      e["n"] = cfg.esn_nodes;
      e["period"] = cfg.esn_period;
      e["repeats"] = cfg.esn_repeats;
      e["sequences_per_class"] = cfg.esn_per_class;
      e["noise_sigma"] = cfg.esn_noise;
      e["noise_as_variance"] = cfg.esn_noise_as_variance;
      e["leak"] = cfg.esn_leak;
      e["input_scale"] = cfg.esn_input_scale;
      e["bias"] = cfg.esn_bias;
      e["activation"] = to_string(cfg.esn_activation);
      if (cfg.esn_lambda)
        e["lambda"] = *cfg.esn_lambda;
      else
        e["lambda"] = "auto";
      e["washout"] = cfg.esn_washout;
      e["sparsity"] = cfg.esn_sparsity;
      e["nii_samples"] = cfg.esn_nii_samples;
      e["accuracy"] =
          cfg.esn_accuracy == AccSource::HeldOut ? "held-out" : "train";
      e["phase"] = cfg.esn_phase;
      meta["esn"] = e;
      break;
    }
    case GridMode::CsGrid: {
      ordered_json c;
      c["n"] = cfg.cs_n;
      c["m"] = cfg.cs_m;
      c["s"] = cfg.cs_s;
      c["noise_sigma"] = cfg.cs_noise;
      c["noise_as_variance"] = cfg.cs_noise_as_variance;
      switch (cfg.cs_delta_policy) {
        case DeltaPolicy::Universal: c["delta_policy"] = "universal"; break;
        case DeltaPolicy::SigmaMultiple: c["delta_policy"] = "sigma"; break;
        case DeltaPolicy::Fixed: c["delta_policy"] = "fixed"; break;
      }
      c["delta"] = cfg.cs_delta;
      c["refit"] = cfg.cs_refit;
      c["constraint"] = to_string(cfg.cs_constraint);
      c["r4_handling"] = cfg.cs_r4 == R4Handling::AsR5 ? "R5" : "R4strict";
      c["density"] = cfg.cs_density;
      c["nii_samples"] = cfg.cs_nii_samples;
      c["rii_samples"] = cfg.cs_rii_samples;
      c["rii_sparsity"] =
          cfg.cs_rii_sparsity > 0 ? cfg.cs_rii_sparsity : cfg.cs_s;
      c["max_iterations"] = cfg.cs_max_iterations;
      c["tolerance"] = cfg.cs_tolerance;
      meta["cs"] = c;
      break;
    }
    case GridMode::IsometrySweep: {
      ordered_json s;
      s["sizes"] = cfg.iso_sizes;
      s["samples"] = cfg.iso_samples;
      s["sparsity"] = cfg.esn_sparsity;
      meta["isometry"] = s;
      break;
    }
  }
  return meta;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);  // \n endings on every platform
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  return out;
}

}  // namespace

std::vector<std::filesystem::path> emit_results(const GridResult& result,
                                                const ExperimentConfig& cfg) {
  check_self_consistency(result, cfg.repetitions);
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + cfg.out_dir.string());

  std::vector<std::filesystem::path> paths;
  const std::string base = to_string(result.mode);

  if (cfg.out_csv) {
    const auto path = cfg.out_dir / (base + ".csv");
    auto out = open_out(path);
    out << "method,scaling";
    if (!result.rows.empty())
      for (const auto& [name, _] : result.rows.front().columns)
        out << ',' << name;
    out << ",reps,failures\n";
    for (const auto& row : result.rows) {
      out << row.method << ',' << row.scaling;
      for (const auto& [_, v] : row.columns) out << ',' << format_double(v);
      out << ',' << row.reps << ',' << row.failures << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
    paths.push_back(path);
  }

  if (cfg.out_json) {
    const auto path = cfg.out_dir / (base + ".json");
    ordered_json doc;
    doc["metadata"] = metadata_json(cfg);
    ordered_json rows = ordered_json::array();
    for (const auto& row : result.rows) {
      ordered_json r;
      r["method"] = row.method;
      r["scaling"] = row.scaling;
      for (const auto& [name, v] : row.columns) r[name] = v;
      r["reps"] = row.reps;
      r["failures"] = row.failures;
      rows.push_back(std::move(r));
    }
    doc["rows"] = std::move(rows);
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
    paths.push_back(path);
  }

  {
    const auto path = cfg.out_dir / "runs.jsonl";
    auto out = open_out(path);
    for (const auto& rec : result.runs) {
      ordered_json r;
      r["method"] = rec.method;
      r["scaling"] = rec.scaling;
      if (result.mode == GridMode::IsometrySweep) r["n"] = rec.size;
      r["rep"] = rec.rep;
      r["status"] = rec.status;
      ordered_json metrics;
      for (const auto& [name, v] : rec.metrics) metrics[name] = v;
      r["metrics"] = std::move(metrics);
      out << r.dump() << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
    paths.push_back(path);
  }

  if (result.mode == GridMode::CsGrid && !result.scatter.empty()) {
    const auto path = cfg.out_dir / "recovery_scatter.csv";
    auto out = open_out(path);
    out << "method,scaling,index,truth,estimate\n";
    for (const auto& p : result.scatter)
      out << p.method << ',' << p.scaling << ',' << p.index << ','
          << format_double(p.truth) << ',' << format_double(p.estimate)
          << '\n';
    if (!out) throw IoError("write failed for " + path.string());
    paths.push_back(path);
  }

  return paths;
}

}  // namespace isolab
