#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace acol {

struct CheckResult {
    std::string name;
    double worst = 0.0;
    double bound = 0.0;
    bool pass = false;
    double seconds = 0.0;
};

/// The full verification battery: the CAM-equivalence report in both
/// precisions plus central finite-difference audits of every layer and of the
/// whole ACoL loss with a frozen mask.
std::vector<CheckResult> run_verification(uint64_t seed = 7, int64_t equivalence_trials = 100);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace acol
