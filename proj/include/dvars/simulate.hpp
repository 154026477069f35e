#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dvars/dvars.hpp"
#include "dvars/volume.hpp"

namespace dvars {

/// Closed interval for a per-voxel parameter draw; lo == hi means constant.
struct Range {
    double lo = 0.0;
    double hi = 0.0;

    static Range constant(double v) { return {v, v}; }
    [[nodiscard]] bool is_constant() const noexcept { return lo == hi; }
};

namespace artifact {
/// Adds Normal(0, (k * sigma_i)^2) to every voxel at one frame (1-based).
struct Spike {
    std::size_t frame = 1;
    double factor = 1.0;
};
/// Adds slope * t to every voxel at frame t (1-based).
struct Drift {
    double slope = 0.0;
};
}  // namespace artifact

using Artifact = std::variant<artifact::Spike, artifact::Drift>;

struct SimulationSpec {
    Geometry geometry;
    std::size_t frames = 100;
    Range mu = Range::constant(1000.0);
    Range sigma = Range::constant(1.0);
    Range rho = Range::constant(0.0);
    std::uint64_t seed = 0;
    std::vector<Artifact> artifacts;
};

/// Throws InvalidInput naming the first offending field.
void validate(const SimulationSpec& spec);

/**
 * Plain key = value config. Keys: nx, ny, nz, frames, tr, voxel_size,
 * mu, sigma, rho (one value, or "lo hi" for a uniform range), seed,
 * spike = "frame factor" (repeatable) and drift = slope. '#' starts a comment.
 */
[[nodiscard]] SimulationSpec parse_simulation_spec(std::string_view text);

struct SimulatedVolume {
    TimeSeriesVolume volume;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> rho;

    /// The true parameters over all voxels.
    [[nodiscard]] VoxelNoiseParams truth() const;
};

/**
 * Y(i, t) = mu_i + e(i, t) with e a stationary AR(1):
 * e_1 ~ N(0, sigma^2), e_t = rho e_{t-1} + N(0, sigma^2 (1 - rho^2)).
 * Artifacts in the spec are applied in order afterwards.
 */
[[nodiscard]] SimulatedVolume simulate_ar1_volume(const SimulationSpec& spec, unsigned workers = 0);

/// `sigma` has one entry per voxel; voxels with sigma 0 are untouched.
[[nodiscard]] TimeSeriesVolume inject_spike(const TimeSeriesVolume& v, std::span<const double> sigma,
                                            std::size_t frame, double factor, std::uint64_t seed);

[[nodiscard]] TimeSeriesVolume inject_drift(const TimeSeriesVolume& v, double slope);

/// Tab-separated `voxel mu sigma rho` table of the true parameters, with
/// round-trip precision.
[[nodiscard]] std::string params_sidecar_text(const SimulatedVolume& sim);

/// Reads a sidecar written by params_sidecar_text; every voxel of the grid
/// must appear exactly once.
[[nodiscard]] VoxelNoiseParams load_params_sidecar(const std::filesystem::path& path,
                                                   const Geometry& geometry);

/// Counter-based seeding helpers, exposed for tests.
namespace rng {

/// SplitMix64 finalizer.
[[nodiscard]] std::uint64_t mix(std::uint64_t x) noexcept;

/// Seed of the independent substream (seed, stream, index).
[[nodiscard]] std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream,
                                           std::uint64_t index) noexcept;

}  // namespace rng

}  // namespace dvars
