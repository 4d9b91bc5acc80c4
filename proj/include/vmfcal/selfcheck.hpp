#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vmfcal {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;  // worst observed error or sample statistic
};

// Numerical cross-validation suite run without any closed-form shortcuts:
// finite-difference checks of every analytic gradient, Monte-Carlo estimates
// of the divergence, and sampler moment checks. Deterministic given the seed.
std::vector<CheckResult> run_selfchecks(uint64_t seed);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace vmfcal
