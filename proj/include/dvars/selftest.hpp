#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace dvars {

/// Problem sizes for the acceptance checks.
struct AcceptanceScale {
    std::size_t voxels = 5000;
    std::size_t frames = 500;
    std::size_t seeds = 10;
    std::size_t long_frames = 100000;  // difference-variance law
    std::size_t robust_samples = 100000;
    std::size_t clean_samples = 2000;

    static AcceptanceScale full() { return {}; }
    static AcceptanceScale reduced() { return {2000, 300, 4, 100000, 100000, 2000}; }
};

struct SelftestOptions {
    AcceptanceScale scale = AcceptanceScale::reduced();
    /// Negative control: inflates the DVARS* / DVARS** denominators.
    bool force_fail = false;
    unsigned workers = 0;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

inline constexpr int kCriterionCount = 9;

/// Runs acceptance criterion `id` (1..9).
[[nodiscard]] CriterionResult run_criterion(int id, const SelftestOptions& options);

/// Runs every criterion, prints a PASS/FAIL table and returns true iff all pass.
/// Output contains no timings so repeated runs print identical text.
bool run_selftest(const SelftestOptions& options, std::ostream& out);

}  // namespace dvars
