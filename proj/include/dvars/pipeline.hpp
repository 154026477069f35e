#pragma once

#include <optional>
#include <string>

#include "dvars/dvars.hpp"
#include "dvars/qc.hpp"
#include "dvars/volume.hpp"

namespace dvars {

inline constexpr const char* kToolVersion = "1.0.0";

struct VariantSelection {
    bool raw = true;
    bool star = true;
    bool star_star = true;
};

/// Accepts a comma-separated subset of raw, star, starstar.
[[nodiscard]] VariantSelection parse_variants(std::string_view text);

struct ComputeOptions {
    EstimationOptions estimation;
    VariantSelection variants;
    FlagPolicy policy = flag_policy::RobustZ{5.0};
    /// Externally known parameters (simulation truth); estimated from the data when empty.
    std::optional<VoxelNoiseParams> supplied_params;
    std::string input_label;
    std::string mask_label;
    unsigned workers = 0;
};

/**
 * Full QC run on one volume. Raw DVARS averages over `mask`; the
 * standardized variants and the flags use `mask` minus constant voxels minus
 * voxels whose noise parameters are undefined. When the standardized
 * variants cannot be computed (too few frames, all voxels degenerate) the
 * report carries raw DVARS only and a warning instead of failing.
 */
[[nodiscard]] QcReport run_qc(const TimeSeriesVolume& v, const Mask& mask, const ComputeOptions& options);

}  // namespace dvars
