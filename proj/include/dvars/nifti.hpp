#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dvars/volume.hpp"

namespace dvars::nifti {

// NIfTI-1 datatype codes handled by the reader and writer.
enum class DataType : std::int16_t {
    UInt8 = 2,
    Int16 = 4,
    Int32 = 8,
    Float32 = 16,
    Float64 = 64,
};

[[nodiscard]] const char* to_string(DataType t) noexcept;

/// A decoded NIfTI-1 image: scaled values in file order (x fastest, then y,
/// z, t).
struct Image {
    std::array<std::int64_t, 8> dim{};  // dim[0] is the rank
    std::array<float, 8> pixdim{};
    DataType datatype = DataType::Float32;
    float scl_slope = 0.0F;
    float scl_inter = 0.0F;
    std::uint8_t xyzt_units = 0;
    std::vector<double> data;

    [[nodiscard]] std::size_t spatial_count() const noexcept;
    [[nodiscard]] std::size_t frame_count() const noexcept;
};

struct WriteOptions {
    DataType datatype = DataType::Float32;
    bool big_endian = false;
    // Written to the header verbatim; values are stored as (v - inter) / slope
    // when slope is nonzero.
    float scl_slope = 0.0F;
    float scl_inter = 0.0F;
};

/// Reads a .nii or .nii.gz file (gzip detected from content, not the name).
[[nodiscard]] Image read_image(const std::filesystem::path& path);

void write_image(const Image& image, const std::filesystem::path& path,
                 const WriteOptions& options = {});

/// Loads a 4D time series. Rejects files with fewer than two frames.
[[nodiscard]] TimeSeriesVolume load_nifti(const std::filesystem::path& path);

void write_nifti(const TimeSeriesVolume& volume, const std::filesystem::path& path,
                 const WriteOptions& options = {});

/// Loads a 3D mask; a voxel is included iff its stored value is > 0.
[[nodiscard]] Mask load_mask(const std::filesystem::path& path, const Geometry& expected);

void write_mask(const Mask& mask, const std::filesystem::path& path);

}  // namespace dvars::nifti
