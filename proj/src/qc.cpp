#include "dvars/qc.hpp"

#include <charconv>
#include <cstdio>

#include "dvars/core_stats.hpp"
#include "dvars/error.hpp"

namespace dvars {

namespace {

constexpr double kMadToSigma = 1.4826;
constexpr double kFallbackThreshold = 1.5;

double parse_arg(std::string_view text, std::string_view what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw InvalidInput("flag policy " + std::string(what) + " needs a number, got \"" +
                           std::string(text) + "\"");
    }
    return v;
}

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::optional<VariantSummary> summarize_column(const std::vector<FrameRecord>& frames,
                                               std::optional<double> FrameRecord::*column) {
    std::vector<double> values;
    for (const auto& f : frames) {
        if (!(f.*column)) return std::nullopt;
        values.push_back(*(f.*column));
    }
    if (values.empty()) return std::nullopt;
    Series s(values);
    return VariantSummary{pairwise_sum(s.values()) / static_cast<double>(s.size()), median(s)};
}

}  // namespace

FlagPolicy parse_flag_policy(std::string_view text) {
    if (text == "none") return flag_policy::None{};
    if (text.substr(0, 4) == "abs=") return flag_policy::Absolute{parse_arg(text.substr(4), "abs")};
    if (text.substr(0, 8) == "zrobust=") {
        const double z = parse_arg(text.substr(8), "zrobust");
        if (!(z > 0.0)) throw InvalidInput("zrobust threshold must be positive");
        return flag_policy::RobustZ{z};
    }
    throw InvalidInput("unknown flag policy \"" + std::string(text) +
                       "\" (expected abs=T, zrobust=Z or none)");
}

std::string to_string(const FlagPolicy& p) {
    if (std::holds_alternative<flag_policy::None>(p)) return "none";
    if (const auto* a = std::get_if<flag_policy::Absolute>(&p)) return "abs=" + format_g(a->threshold);
    return "zrobust=" + format_g(std::get<flag_policy::RobustZ>(p).z);
}

FlagResult flag_outliers(std::span<const double> series, const FlagPolicy& policy) {
    FlagResult out;
    out.flags.assign(series.size(), 0);
    out.applied = policy;
    if (series.empty() || std::holds_alternative<flag_policy::None>(policy)) return out;

    if (const auto* rz = std::get_if<flag_policy::RobustZ>(&policy)) {
        const Series s(series);
        const double med = median(s);
        const double scale = kMadToSigma * median_abs_deviation(s);
        if (scale > 0.0) {
            for (std::size_t k = 0; k < series.size(); ++k) {
                out.flags[k] = (series[k] - med) / scale > rz->z ? 1 : 0;
            }
            return out;
        }
        out.applied = flag_policy::Absolute{kFallbackThreshold};
        out.warnings.push_back("MAD of DVARS* is zero; robust-z flagging fell back to abs=1.5");
    }

    const double tau = std::get<flag_policy::Absolute>(out.applied).threshold;
    for (std::size_t k = 0; k < series.size(); ++k) out.flags[k] = series[k] > tau ? 1 : 0;
    return out;
}

void summarize(QcReport& report) {
    auto& s = report.summary;
    s.dvars = summarize_column(report.frames, &FrameRecord::dvars);
    s.dvars_star = summarize_column(report.frames, &FrameRecord::dvars_star);
    s.dvars_star_star = summarize_column(report.frames, &FrameRecord::dvars_star_star);
    s.flagged_frames = 0;
    for (const auto& f : report.frames) s.flagged_frames += f.flag;
}

}  // namespace dvars
