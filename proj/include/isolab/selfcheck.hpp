#pragma once

#include <string>
#include <vector>

namespace isolab {

// One oracle comparison or invariant probe.  `detail` carries the measured
// numbers either way so failures are diagnosable from the printed line.
struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<CheckResult> run_numerics_checks();
std::vector<CheckResult> run_ensemble_checks();
std::vector<CheckResult> run_isometry_checks();
std::vector<CheckResult> run_dataset_checks();
std::vector<CheckResult> run_esn_checks();
std::vector<CheckResult> run_csrecovery_checks();
std::vector<CheckResult> run_harness_checks();

// Everything above, in order.
std::vector<CheckResult> run_all_checks();

}  // namespace isolab
