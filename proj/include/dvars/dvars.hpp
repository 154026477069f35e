#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dvars/volume.hpp"

namespace dvars {

struct EstimatorMeta {
    bool robust_sigma = true;
    bool detrend = false;
    /// True when the parameters were supplied (e.g. simulation truth) rather
    /// than estimated from the data.
    bool supplied = false;
    /// Masked voxels dropped because sigma or rho was undefined for them.
    std::vector<std::size_t> excluded_voxels;
};

/**
 * Per-voxel AR(1) noise parameters over an effective mask.
 *
 * diff_var[k] == 2 (1 - rho[k]) sigma[k]^2 holds exactly: it is computed once
 * in the constructor and never mutated.
 */
class VoxelNoiseParams {
public:
    VoxelNoiseParams(Geometry geometry, std::vector<std::size_t> voxels, std::vector<double> sigma,
                     std::vector<double> rho, EstimatorMeta meta = {});

    /// Parameters known a priori (simulation truth), one entry per voxel of `mask`.
    static VoxelNoiseParams supplied(const Mask& mask, std::span<const double> sigma,
                                     std::span<const double> rho);

    [[nodiscard]] const Geometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] std::span<const std::size_t> voxels() const noexcept { return voxels_; }
    [[nodiscard]] std::span<const double> sigma() const noexcept { return sigma_; }
    [[nodiscard]] std::span<const double> rho() const noexcept { return rho_; }
    [[nodiscard]] std::span<const double> diff_var() const noexcept { return diff_var_; }
    [[nodiscard]] const EstimatorMeta& meta() const noexcept { return meta_; }
    [[nodiscard]] std::size_t size() const noexcept { return voxels_.size(); }
    [[nodiscard]] bool empty() const noexcept { return voxels_.empty(); }

    [[nodiscard]] Mask effective_mask() const;

private:
    Geometry geometry_;
    std::vector<std::size_t> voxels_;
    std::vector<double> sigma_;
    std::vector<double> rho_;
    std::vector<double> diff_var_;
    EstimatorMeta meta_;
};

/// The subset of `p` lying inside `m`.
[[nodiscard]] VoxelNoiseParams restrict_to(const VoxelNoiseParams& p, const Mask& m);

struct EstimationOptions {
    bool robust_sigma = true;
    bool detrend = false;
    unsigned workers = 0;  // 0: DVARS_THREADS or hardware default
};

/// Smallest frame count for which noise parameters can be estimated.
[[nodiscard]] std::size_t min_frames_for_estimation(const EstimationOptions& options) noexcept;

/**
 * Estimates sigma (IQR/1.349 or sample SD) and the lag-1 correlation for
 * every masked voxel, optionally after removing a linear trend. Voxels whose
 * parameters are undefined are dropped and listed in meta().excluded_voxels.
 * Throws DegenerateInput when nothing survives.
 */
[[nodiscard]] VoxelNoiseParams estimate_noise_params(const TimeSeriesVolume& v, const Mask& m,
                                                     const EstimationOptions& options = {});

/// Null expectation of DVARS^2: mean over voxels of 2 (1 - rho) sigma^2.
[[nodiscard]] double expected_dvars_sq(const VoxelNoiseParams& p);

enum class Variant { Raw, Star, StarStar };

[[nodiscard]] const char* to_string(Variant v) noexcept;

/// One value per frame t = 2..T (values[k] belongs to frame k + 2).
struct DvarsSeries {
    Variant variant = Variant::Raw;
    std::vector<double> values;
    /// Voxels averaged over.
    std::size_t voxels_used = 0;
    /// Voxels excluded for a degenerate difference variance (DVARS** only).
    std::size_t voxels_excluded = 0;
};

/// RMS over masked voxels of the frame-to-frame difference. No centering.
[[nodiscard]] DvarsSeries dvars(const TimeSeriesVolume& v, const Mask& m, unsigned workers = 0);

/**
 * dvars over the effective mask of `p`, divided by sqrt(expected_dvars_sq(p)).
 * Every voxel of `p` must lie in `m`.
 */
[[nodiscard]] DvarsSeries dvars_standardized(const TimeSeriesVolume& v, const Mask& m,
                                             const VoxelNoiseParams& p, unsigned workers = 0);

/**
 * RMS of voxel-wise standardized differences, each divided by
 * sqrt(2 (1 - rho) sigma^2). Voxels with diff_var <= 1e-12 * median(diff_var)
 * are left out and counted in voxels_excluded.
 */
[[nodiscard]] DvarsSeries dvars_voxel_standardized(const TimeSeriesVolume& v, const Mask& m,
                                                   const VoxelNoiseParams& p, unsigned workers = 0);

}  // namespace dvars
