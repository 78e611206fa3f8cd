#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace blob {

struct VerifyOptions {
    std::size_t m = 4;
    std::size_t n = 3;
    std::size_t r = 2;
    double sigma_p = 0.2;
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
    bool zero_b = false;  // adversarial B = 0
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;  // margins, or why the check could not run
};

// Runs the full-weight KL equivalence, prior-factor independence, posterior
// moment, KL Monte-Carlo, flipout moment and parameterization race checks.
std::vector<CheckResult> verify_theorems(const VerifyOptions& options);

void write_checks(std::ostream& out, const std::vector<CheckResult>& checks);

} // namespace blob
