#pragma once

#include <filesystem>
#include <string_view>

#include "dvars/volume.hpp"

namespace dvars {

/// Parses a text matrix: one row per voxel, one tab- or comma-separated
/// column per frame. The grid is (rows, 1, 1).
[[nodiscard]] TimeSeriesVolume parse_tsv_matrix(std::string_view text, std::string source = "<memory>");

[[nodiscard]] TimeSeriesVolume load_tsv_matrix(const std::filesystem::path& path);

}  // namespace dvars
