#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dcrbm {

/// One measured-vs-tolerance verdict.
struct OracleCheck {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string detail;
};

struct OracleReport {
    std::string suite;
    std::vector<OracleCheck> checks;

    bool passed() const;
    std::string text() const;
};

/// gradients, enumeration, sampler, cd-equivalence, ais, centering, bounds.
std::vector<std::string> oracle_suite_names();

/// Runs one suite, or every suite for "all". Throws ConfigError for an
/// unknown name.
std::vector<OracleReport> run_oracle_suite(const std::string& name, std::uint64_t seed = 7);

} // namespace dcrbm
