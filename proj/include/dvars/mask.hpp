#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "dvars/volume.hpp"

namespace dvars {

namespace mask_strategy {
struct All {};
struct NonzeroMean {};
/// Temporal mean >= fraction * (grand mean of the positive voxel means).
struct MeanFraction {
    double fraction = 0.1;
};
/// Voxels whose trace is not constant.
struct Nonconstant {};
}  // namespace mask_strategy

using MaskStrategy = std::variant<mask_strategy::All, mask_strategy::NonzeroMean,
                                  mask_strategy::MeanFraction, mask_strategy::Nonconstant>;

/// Accepts "all", "nonzero-mean", "mean-frac=F" and "nonconstant".
[[nodiscard]] MaskStrategy parse_mask_strategy(std::string_view text);
[[nodiscard]] std::string to_string(const MaskStrategy& s);

/// Throws InvalidInput when no voxel survives.
[[nodiscard]] Mask derive_mask(const TimeSeriesVolume& v, const MaskStrategy& strategy);

}  // namespace dvars
