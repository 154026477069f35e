#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dvars {

struct Geometry {
    std::size_t nx = 1;
    std::size_t ny = 1;
    std::size_t nz = 1;
    std::optional<std::array<double, 3>> voxel_size_mm;
    std::optional<double> repetition_time_s;

    [[nodiscard]] std::size_t voxel_count() const noexcept { return nx * ny * nz; }
    [[nodiscard]] bool same_grid(const Geometry& other) const noexcept {
        return nx == other.nx && ny == other.ny && nz == other.nz;
    }
};

/// Explains a grid mismatch dimension by dimension; empty when the grids agree.
[[nodiscard]] std::string describe_grid_mismatch(const Geometry& expected, const Geometry& actual);

/**
 * 4D data Y(i, t) stored voxel-major: each voxel's trace is contiguous.
 *
 * Invariants: at least two frames, every value finite, and
 * values.size() == geometry.voxel_count() * frames.
 */
class TimeSeriesVolume {
public:
    TimeSeriesVolume(Geometry geometry, std::size_t frames, std::vector<double> values,
                     std::string source = {});

    [[nodiscard]] const Geometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] std::size_t voxel_count() const noexcept { return geometry_.voxel_count(); }
    [[nodiscard]] std::size_t frame_count() const noexcept { return frames_; }
    [[nodiscard]] const std::string& source() const noexcept { return source_; }

    [[nodiscard]] std::span<const double> trace(std::size_t voxel) const {
        return {values_.data() + voxel * frames_, frames_};
    }
    [[nodiscard]] double at(std::size_t voxel, std::size_t frame) const {
        return values_[voxel * frames_ + frame];
    }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    // Mutable access for generators. Callers must keep values finite.
    [[nodiscard]] std::span<double> mutable_trace(std::size_t voxel) {
        return {values_.data() + voxel * frames_, frames_};
    }

private:
    Geometry geometry_;
    std::size_t frames_;
    std::vector<double> values_;
    std::string source_;
};

/// Per-voxel inclusion set. The count of included voxels is the I of every
/// spatial average.
class Mask {
public:
    Mask(Geometry geometry, std::vector<std::uint8_t> included);

    static Mask all(const Geometry& geometry);
    /// Builds a mask of the given grid from a sorted list of voxel indices.
    static Mask from_indices(const Geometry& geometry, std::span<const std::size_t> voxels);

    [[nodiscard]] const Geometry& geometry() const noexcept { return geometry_; }
    [[nodiscard]] std::size_t count() const noexcept { return count_; }
    [[nodiscard]] bool contains(std::size_t voxel) const { return included_[voxel] != 0; }
    /// Included voxel indices, ascending.
    [[nodiscard]] std::vector<std::size_t> indices() const;

    [[nodiscard]] Mask intersect(const Mask& other) const;

    friend bool operator==(const Mask& a, const Mask& b) {
        return a.geometry_.same_grid(b.geometry_) && a.included_ == b.included_;
    }

private:
    Geometry geometry_;
    std::vector<std::uint8_t> included_;
    std::size_t count_ = 0;
};

}  // namespace dvars
