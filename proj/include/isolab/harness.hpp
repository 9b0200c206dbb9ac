#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "isolab/csrecovery.hpp"
#include "isolab/datasets.hpp"
#include "isolab/ensembles.hpp"
#include "isolab/esn.hpp"
#include "isolab/isometry.hpp"

namespace isolab {

enum class GridMode { EsnGrid, CsGrid, IsometrySweep };
enum class AccSource { HeldOut, Train };
enum class DeltaPolicy { Universal, SigmaMultiple, Fixed };
enum class R4Handling { AsR5, Strict };

const char* to_string(GridMode m);

struct ExperimentConfig {
  GridMode mode = GridMode::EsnGrid;
  std::vector<GenTag> methods{GenTag::M1, GenTag::M2, GenTag::M3, GenTag::M4,
                              GenTag::M5};
  std::vector<ScaleTag> scalings{ScaleTag::R1, ScaleTag::R2, ScaleTag::R3,
                                 ScaleTag::R4, ScaleTag::R5};
  int repetitions = 20;
  std::uint64_t seed_value = 42;
  std::uint64_t seed_stream = 0;
  int threads = 0;  // 0 = automatic (hardware, capped by ISOLAB_THREADS)

  // esn-grid
  Index esn_nodes = 200;
  int esn_period = 100;
  int esn_repeats = 20;
  int esn_per_class = 1;
  double esn_noise = 0.05;
  bool esn_noise_as_variance = false;
  double esn_leak = 1.0;
  double esn_input_scale = 1.0;
  double esn_bias = 0.7853981633974483;  // pi/4
  Activation esn_activation = Activation::Tanh;
  std::optional<double> esn_lambda;  // absent = 1e-6 tr(X X^T)/N
  int esn_washout = 0;
  double esn_sparsity = 0.2;  // M4/M5 density (also used by isometry sweeps)
  int esn_nii_samples = 10000;
  AccSource esn_accuracy = AccSource::HeldOut;
  double esn_phase = 0.0;
  bool esn_dump_datasets = false;

  // cs-grid
  Index cs_n = 800;
  Index cs_m = 200;
  Index cs_s = 30;
  double cs_noise = 0.05;
  bool cs_noise_as_variance = false;
  DeltaPolicy cs_delta_policy = DeltaPolicy::Universal;
  double cs_delta = 0.5;  // fixed value / sigma multiple / universal multiple
  bool cs_refit = true;   // least-squares refit on the thresholded support
  ConstraintForm cs_constraint = ConstraintForm::Correlation;
  R4Handling cs_r4 = R4Handling::AsR5;
  double cs_density = 0.2;
  int cs_nii_samples = 10000;  // R2 scale estimation
  int cs_rii_samples = 10000;
  Index cs_rii_sparsity = 0;  // 0 = same as cs_s
  int cs_max_iterations = 200;
  double cs_tolerance = 1e-8;
  bool cs_scatter = true;

  // isometry sweep
  std::vector<Index> iso_sizes{50, 100, 200, 400};
  int iso_samples = 10000;

  // output
  std::filesystem::path out_dir = "results";
  bool out_csv = true;
  bool out_json = true;
};

struct RunRecord {
  std::string method;
  std::string scaling;
  Index size = 0;  // isometry sweeps only; 0 elsewhere
  int rep = 0;
  std::vector<std::pair<std::string, double>> metrics;
  std::string status;  // "ok", a solver status, or "failed: <reason>"
  bool failed = false;
};

struct AggregateRow {
  std::string method;
  std::string scaling;
  std::vector<std::pair<std::string, double>> columns;  // CSV order
  int reps = 0;      // completed repetitions
  int failures = 0;  // recorded, never silently dropped

  double value(const std::string& name) const;
};

struct ScatterPoint {
  std::string method;
  std::string scaling;
  Index index = 0;
  double truth = 0.0;
  double estimate = 0.0;
};

struct GridResult {
  GridMode mode = GridMode::EsnGrid;
  std::vector<AggregateRow> rows;
  std::vector<RunRecord> runs;
  std::vector<ScatterPoint> scatter;  // cs-grid, first repetition per pair
};

// --- config ---------------------------------------------------------------

std::vector<std::pair<std::string, std::string>> parse_key_values(
    std::istream& in);

// Parse + apply + validate a config file for the given mode.
ExperimentConfig load_config(const std::filesystem::path& path, GridMode mode);

void apply_key_values(
    ExperimentConfig& cfg,
    const std::vector<std::pair<std::string, std::string>>& kvs);

void validate_config(const ExperimentConfig& cfg);

double effective_sigma(double value, bool as_variance);

// Explicit request > hardware count, both capped by ISOLAB_THREADS.
int resolve_threads(int requested);

// --- execution ------------------------------------------------------------

GridResult run_esn_grid(const ExperimentConfig& cfg);
GridResult run_cs_grid(const ExperimentConfig& cfg);
GridResult run_isometry_sweep(const ExperimentConfig& cfg);
GridResult run_grid(const ExperimentConfig& cfg);

// Writes <mode>.csv / <mode>.json / runs.jsonl (+ recovery_scatter.csv for
// cs grids) into cfg.out_dir; returns the paths written.  Re-aggregates the
// raw records and insists on bit-identical agreement with `result.rows`.
std::vector<std::filesystem::path> emit_results(const GridResult& result,
                                                const ExperimentConfig& cfg);

}  // namespace isolab
