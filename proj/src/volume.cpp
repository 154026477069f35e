#include "dvars/volume.hpp"

#include <algorithm>
#include <cmath>

#include "dvars/error.hpp"

namespace dvars {

std::string describe_grid_mismatch(const Geometry& expected, const Geometry& actual) {
    std::string msg;
    const auto check = [&](const char* name, std::size_t want, std::size_t got) {
        if (want != got) {
            if (!msg.empty()) msg += ", ";
            msg += std::string(name) + ": expected " + std::to_string(want) + ", got " +
                   std::to_string(got);
        }
    };
    check("nx", expected.nx, actual.nx);
    check("ny", expected.ny, actual.ny);
    check("nz", expected.nz, actual.nz);
    return msg;
}

TimeSeriesVolume::TimeSeriesVolume(Geometry geometry, std::size_t frames,
                                   std::vector<double> values, std::string source)
    : geometry_(std::move(geometry)),
      frames_(frames),
      values_(std::move(values)),
      source_(std::move(source)) {
    if (frames_ < 2) {
        throw InvalidInput("time dimension < 2: differencing needs at least two frames");
    }
    if (geometry_.voxel_count() == 0) {
        throw InvalidInput("volume has no voxels");
    }
    if (values_.size() != geometry_.voxel_count() * frames_) {
        throw InvalidInput("volume value count " + std::to_string(values_.size()) +
                           " does not match " + std::to_string(geometry_.voxel_count()) +
                           " voxels x " + std::to_string(frames_) + " frames");
    }
    const auto bad = std::find_if(values_.begin(), values_.end(),
                                  [](double v) { return !std::isfinite(v); });
    if (bad != values_.end()) {
        const auto pos = static_cast<std::size_t>(bad - values_.begin());
        throw InvalidInput("non-finite value at voxel " + std::to_string(pos / frames_) +
                           ", frame " + std::to_string(pos % frames_ + 1));
    }
}

Mask::Mask(Geometry geometry, std::vector<std::uint8_t> included)
    : geometry_(std::move(geometry)), included_(std::move(included)) {
    if (included_.size() != geometry_.voxel_count()) {
        throw InvalidInput("mask size " + std::to_string(included_.size()) +
                           " does not match grid of " + std::to_string(geometry_.voxel_count()) +
                           " voxels");
    }
    for (auto& v : included_) {
        v = v != 0 ? 1 : 0;
        count_ += v;
    }
}

Mask Mask::all(const Geometry& geometry) {
    return Mask(geometry, std::vector<std::uint8_t>(geometry.voxel_count(), 1));
}

Mask Mask::from_indices(const Geometry& geometry, std::span<const std::size_t> voxels) {
    std::vector<std::uint8_t> inc(geometry.voxel_count(), 0);
    for (auto v : voxels) {
        if (v >= inc.size()) throw InvalidInput("mask voxel index out of range");
        inc[v] = 1;
    }
    return Mask(geometry, std::move(inc));
}

std::vector<std::size_t> Mask::indices() const {
    std::vector<std::size_t> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < included_.size(); ++i) {
        if (included_[i]) out.push_back(i);
    }
    return out;
}

Mask Mask::intersect(const Mask& other) const {
    if (!geometry_.same_grid(other.geometry_)) {
        throw InvalidInput("mask geometry mismatch: " +
                           describe_grid_mismatch(geometry_, other.geometry_));
    }
    std::vector<std::uint8_t> inc(included_.size());
    for (std::size_t i = 0; i < inc.size(); ++i) inc[i] = included_[i] & other.included_[i];
    return Mask(geometry_, std::move(inc));
}

}  // namespace dvars
