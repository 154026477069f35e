#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dvars {

namespace flag_policy {
struct None {};
/// Flag when value > threshold.
struct Absolute {
    double threshold = 1.5;
};
/// Flag when (value - median) / (1.4826 MAD) > z.
struct RobustZ {
    double z = 5.0;
};
}  // namespace flag_policy

using FlagPolicy = std::variant<flag_policy::None, flag_policy::Absolute, flag_policy::RobustZ>;

/// Accepts "none", "abs=T" and "zrobust=Z".
[[nodiscard]] FlagPolicy parse_flag_policy(std::string_view text);
[[nodiscard]] std::string to_string(const FlagPolicy& p);

struct FlagResult {
    std::vector<std::uint8_t> flags;
    /// The policy that actually ran (robust-z falls back to abs=1.5 when MAD is 0).
    FlagPolicy applied;
    std::vector<std::string> warnings;
};

[[nodiscard]] FlagResult flag_outliers(std::span<const double> series, const FlagPolicy& policy);

struct FrameRecord {
    std::size_t frame = 0;  // 1-based; the pair (frame - 1, frame)
    std::optional<double> dvars;
    std::optional<double> dvars_star;
    std::optional<double> dvars_star_star;
    std::uint8_t flag = 0;

    friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct VariantSummary {
    double mean = 0.0;
    double median = 0.0;

    friend bool operator==(const VariantSummary&, const VariantSummary&) = default;
};

struct ReportSummary {
    std::optional<VariantSummary> dvars;
    std::optional<VariantSummary> dvars_star;
    std::optional<VariantSummary> dvars_star_star;
    std::size_t flagged_frames = 0;
    std::size_t excluded_degenerate = 0;  // dropped by noise estimation
    std::size_t excluded_star_star = 0;   // dropped from DVARS** for ~zero diff_var

    friend bool operator==(const ReportSummary&, const ReportSummary&) = default;
};

struct ReportMeta {
    std::string tool = "dvars";
    std::string version;
    std::string input;
    std::string mask;
    bool robust_sigma = true;
    bool detrend = false;
    std::string params_source;  // "estimated", "supplied" or "none"
    std::string rho_estimator;
    std::string flag_policy;
    std::size_t voxels = 0;            // I of the raw series
    std::size_t effective_voxels = 0;  // I of the standardized series
    std::size_t frames = 0;            // T
    std::vector<std::string> warnings;
    std::vector<std::string> assumptions;

    friend bool operator==(const ReportMeta&, const ReportMeta&) = default;
};

struct QcReport {
    ReportMeta meta;
    ReportSummary summary;
    std::vector<FrameRecord> frames;

    friend bool operator==(const QcReport&, const QcReport&) = default;
};

/// Fills summary statistics (means, medians, flag count) from the frames.
void summarize(QcReport& report);

}  // namespace dvars
