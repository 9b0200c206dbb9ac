#include "CLI11.hpp"

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "isolab/harness.hpp"
#include "isolab/selfcheck.hpp"

namespace {

using namespace isolab;

std::vector<GenTag> method_list(const std::string& csv) {
  std::vector<GenTag> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    const auto item = csv.substr(pos, comma - pos);
    if (!item.empty()) out.push_back(gen_tag_from_string(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ValidationError("empty method list");
  return out;
}

std::vector<ScaleTag> scaling_list(const std::string& csv) {
  std::vector<ScaleTag> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const auto comma = csv.find(',', pos);
    const auto item = csv.substr(pos, comma - pos);
    if (!item.empty()) out.push_back(scale_tag_from_string(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ValidationError("empty scaling list");
  return out;
}

int run_and_emit(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const GridResult result = run_grid(cfg);
  const auto paths = emit_results(result, cfg);
  int failures = 0;
  for (const auto& row : result.rows) failures += row.failures;
  std::printf("%s: %zu rows from %zu runs (%d failed)\n", to_string(cfg.mode),
              result.rows.size(), result.runs.size(), failures);
  for (const auto& p : paths) std::printf("  wrote %s\n", p.string().c_str());
  return 0;
}

int run_selfcheck() {
  const auto checks = run_all_checks();
  int failed = 0;
  for (const auto& c : checks) {
    std::printf("[%s] %s: %s\n", c.pass ? "pass" : "FAIL", c.name.c_str(),
                c.detail.c_str());
    if (!c.pass) ++failed;
  }
  std::printf("%zu checks, %d failed\n", checks.size(), failed);
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random reservoir weights, near-isometry intervals, and sparse "
               "recovery at desk scale"};
  app.require_subcommand(1);

  // Shared override state; only options the user actually passed are applied.
  std::string config_path, out_dir, methods_csv, scalings_csv, constraint,
      r4_mode, accuracy_source;
  std::uint64_t seed = 0;
  int reps = 0, threads = 0, samples = 0;
  double sparsity = 0.0;
  std::vector<Index> sizes;

  auto* esn = app.add_subcommand("esn-grid",
                                 "waveform-classification grid over "
                                 "generation methods and scaling rules");
  esn->add_option("--config", config_path, "key = value config file")
      ->required();
  esn->add_option("--out", out_dir, "output directory (overrides out.dir)");
  esn->add_option("--seed", seed, "base seed (overrides rng.seed)");
  esn->add_option("--reps", reps, "repetitions per grid cell");
  esn->add_option("--methods", methods_csv, "comma list, e.g. M1,M2");
  esn->add_option("--scalings", scalings_csv, "comma list, e.g. R1,R2");
  esn->add_option("--threads", threads, "worker threads (0 = automatic)");
  auto* held = esn->add_flag("--held-out", "score accuracy on held-out data");
  auto* train = esn->add_flag("--train-acc", "score accuracy on training data");
  held->excludes(train);
  train->excludes(held);

  auto* cs = app.add_subcommand(
      "cs-grid", "sparse-recovery grid with the Dantzig selector");
  cs->add_option("--config", config_path, "key = value config file")
      ->required();
  cs->add_option("--out", out_dir, "output directory (overrides out.dir)");
  cs->add_option("--seed", seed, "base seed (overrides rng.seed)");
  cs->add_option("--reps", reps, "repetitions per grid cell");
  cs->add_option("--methods", methods_csv, "comma list, e.g. M1,M2");
  cs->add_option("--scalings", scalings_csv, "comma list, e.g. R1,R5");
  cs->add_option("--threads", threads, "worker threads (0 = automatic)");
  auto* nav = cs->add_flag("--noise-as-variance",
                           "read the noise level as a variance");
  cs->add_option("--constraint", constraint,
                 "residual or correlation constraint form")
      ->check(CLI::IsMember({"residual", "correlation"}));
  cs->add_option("--table2-r4-as", r4_mode,
                 "how to run R4 on non-square sensing matrices")
      ->check(CLI::IsMember({"R5", "R4strict"}));

  auto* iso = app.add_subcommand(
      "isometry", "near-isometry interval sweep over matrix sizes");
  iso->add_option("--method", methods_csv, "comma list, e.g. M3");
  iso->add_option("--n", sizes, "comma list of square sizes")
      ->delimiter(',');
  iso->add_option("--scaling", scalings_csv, "comma list, e.g. R1,R2");
  iso->add_option("--samples", samples, "Monte-Carlo samples per estimate");
  iso->add_option("--reps", reps, "repetitions per cell");
  iso->add_option("--seed", seed, "base seed");
  iso->add_option("--sparsity", sparsity, "density for M4/M5 generators");
  iso->add_option("--out", out_dir, "output directory");
  iso->add_option("--threads", threads, "worker threads (0 = automatic)");

  auto* self = app.add_subcommand(
      "selfcheck", "run the oracle comparisons and invariant probes");

  try {
    app.parse(argc, argv);

    if (self->parsed()) return run_selfcheck();

    ExperimentConfig cfg;
    if (esn->parsed()) {
      cfg = load_config(config_path, GridMode::EsnGrid);
      if (esn->count("--methods")) cfg.methods = method_list(methods_csv);
      if (esn->count("--scalings")) cfg.scalings = scaling_list(scalings_csv);
      if (*held) cfg.esn_accuracy = AccSource::HeldOut;
      if (*train) cfg.esn_accuracy = AccSource::Train;
    } else if (cs->parsed()) {
      cfg = load_config(config_path, GridMode::CsGrid);
      if (cs->count("--methods")) cfg.methods = method_list(methods_csv);
      if (cs->count("--scalings")) cfg.scalings = scaling_list(scalings_csv);
      if (*nav) cfg.cs_noise_as_variance = true;
      if (cs->count("--constraint"))
        cfg.cs_constraint = constraint_form_from_string(constraint);
      if (cs->count("--table2-r4-as"))
        cfg.cs_r4 = r4_mode == "R5" ? R4Handling::AsR5 : R4Handling::Strict;
    } else {  // isometry: flag-driven, no config file
      cfg.mode = GridMode::IsometrySweep;
      cfg.scalings = {ScaleTag::R1, ScaleTag::R2};
      if (iso->count("--method")) cfg.methods = method_list(methods_csv);
      if (iso->count("--n")) cfg.iso_sizes = sizes;
      if (iso->count("--scaling")) cfg.scalings = scaling_list(scalings_csv);
      if (iso->count("--samples")) cfg.iso_samples = samples;
      if (iso->count("--sparsity")) cfg.esn_sparsity = sparsity;
    }
    auto* active = esn->parsed() ? esn : (cs->parsed() ? cs : iso);
    if (active->count("--out")) cfg.out_dir = out_dir;
    if (active->count("--seed")) cfg.seed_value = seed;
    if (active->count("--reps")) cfg.repetitions = reps;
    if (active->count("--threads")) cfg.threads = threads;
    return run_and_emit(cfg);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected failure: %s\n", e.what());
    return 2;
  }
}
