#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "dvars/qc.hpp"

namespace dvars {

enum class ReportFormat { Tsv, Json };

[[nodiscard]] ReportFormat parse_report_format(std::string_view text);

/// Header `frame dvars dvars_star dvars_star_star flag` (tab separated), one
/// row per frame, %.6g values, NA for variants not computed, LF endings.
[[nodiscard]] std::string report_to_tsv(const QcReport& r);

/// Object with `meta`, `summary` and `frames`; missing variants are null.
[[nodiscard]] std::string report_to_json(const QcReport& r);

[[nodiscard]] QcReport report_from_json(std::string_view text);

/// Writes to `path`, or to stdout when path is "-".
void write_report(const QcReport& r, const std::filesystem::path& path, ReportFormat format);

}  // namespace dvars
