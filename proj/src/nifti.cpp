#include "dvars/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <string>

#include "dvars/error.hpp"

namespace dvars::nifti {

namespace {

constexpr std::int32_t kHeaderSize = 348;
constexpr std::size_t kSingleFileOffset = 352;

// Byte offsets of the NIfTI-1 header fields in use.
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffDescrip = 148;
constexpr std::size_t kOffMagic = 344;

struct GzCloser {
    void operator()(gzFile_s* f) const noexcept { gzclose(f); }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
        throw IoError("no such file: " + path.string());
    }
    GzHandle f(gzopen(path.string().c_str(), "rb"));
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> out;
    std::vector<unsigned char> buf(1 << 16);
    for (;;) {
        const int n = gzread(f.get(), buf.data(), static_cast<unsigned>(buf.size()));
        if (n < 0) throw IoError("read error (corrupt gzip stream?) in " + path.string());
        if (n == 0) break;
        out.insert(out.end(), buf.begin(), buf.begin() + n);
    }
    return out;
}

void spill(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    const auto name = path.string();
    const bool gz = name.size() > 3 && name.compare(name.size() - 3, 3, ".gz") == 0;
    GzHandle f(gzopen(name.c_str(), gz ? "wb6" : "wbT"));
    if (!f) throw IoError("cannot open " + name + " for writing");
    std::size_t done = 0;
    while (done < bytes.size()) {
        const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - done, 1U << 20));
        if (gzwrite(f.get(), bytes.data() + done, chunk) != static_cast<int>(chunk)) {
            throw IoError("write error on " + name);
        }
        done += chunk;
    }
    if (gzclose(f.release()) != Z_OK) throw IoError("write error on " + name);
}

// Reads and writes scalars at a byte offset with a fixed file byte order.
class ByteView {
public:
    ByteView(unsigned char* base, bool swap) : base_(base), swap_(swap) {}

    template <typename T>
    [[nodiscard]] T get(std::size_t off) const {
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, base_ + off, sizeof(T));
        if (swap_) std::reverse(raw, raw + sizeof(T));
        T v;
        std::memcpy(&v, raw, sizeof(T));
        return v;
    }

    template <typename T>
    void put(std::size_t off, T v) {
        unsigned char raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        if (swap_) std::reverse(raw, raw + sizeof(T));
        std::memcpy(base_ + off, raw, sizeof(T));
    }

private:
    unsigned char* base_;
    bool swap_;
};

std::size_t bytes_per_value(DataType t) {
    switch (t) {
        case DataType::UInt8: return 1;
        case DataType::Int16: return 2;
        case DataType::Int32: return 4;
        case DataType::Float32: return 4;
        case DataType::Float64: return 8;
    }
    return 0;
}

bool is_supported(std::int16_t code) {
    switch (code) {
        case 2: case 4: case 8: case 16: case 64: return true;
        default: return false;
    }
}

std::size_t element_count(const std::array<std::int64_t, 8>& dim) {
    std::size_t n = 1;
    for (std::int64_t d = 1; d <= dim[0]; ++d) n *= static_cast<std::size_t>(dim[d]);
    return n;
}

std::filesystem::path companion_image(const std::filesystem::path& hdr) {
    auto name = hdr.string();
    const bool gz = name.size() > 3 && name.compare(name.size() - 3, 3, ".gz") == 0;
    if (gz) name.resize(name.size() - 3);
    if (name.size() > 4 && name.compare(name.size() - 4, 4, ".hdr") == 0) {
        name.replace(name.size() - 4, 4, ".img");
    } else {
        throw IoError("header-only NIfTI file (magic ni1) must be named .hdr: " + hdr.string());
    }
    std::filesystem::path img = name;
    if (gz || !std::filesystem::exists(img)) {
        std::filesystem::path alt = name + ".gz";
        if (std::filesystem::exists(alt)) return alt;
    }
    return img;
}

template <typename T>
void decode(const ByteView& view, std::size_t off, std::size_t n, std::vector<double>& out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = static_cast<double>(view.get<T>(off + i * sizeof(T)));
    }
}

template <typename T>
void encode_integer(ByteView& view, std::size_t off, std::span<const double> values,
                    const std::filesystem::path& path) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double r = std::nearbyint(values[i]);
        if (!(r >= static_cast<double>(std::numeric_limits<T>::min()) &&
              r <= static_cast<double>(std::numeric_limits<T>::max()))) {
            throw InvalidInput("value " + std::to_string(values[i]) + " does not fit datatype of " +
                               path.string());
        }
        view.put<T>(off + i * sizeof(T), static_cast<T>(r));
    }
}

double time_unit_seconds(std::uint8_t xyzt_units) {
    switch (xyzt_units & 0x38) {
        case 16: return 1e-3;
        case 24: return 1e-6;
        default: return 1.0;
    }
}

}  // namespace

const char* to_string(DataType t) noexcept {
    switch (t) {
        case DataType::UInt8: return "uint8";
        case DataType::Int16: return "int16";
        case DataType::Int32: return "int32";
        case DataType::Float32: return "float32";
        case DataType::Float64: return "float64";
    }
    return "unknown";
}

std::size_t Image::spatial_count() const noexcept {
    std::size_t n = 1;
    for (std::int64_t d = 1; d <= std::min<std::int64_t>(dim[0], 3); ++d) {
        n *= static_cast<std::size_t>(dim[d]);
    }
    return n;
}

std::size_t Image::frame_count() const noexcept {
    return dim[0] >= 4 ? static_cast<std::size_t>(dim[4]) : 1;
}

Image read_image(const std::filesystem::path& path) {
    auto bytes = slurp(path);
    if (bytes.size() < static_cast<std::size_t>(kHeaderSize)) {
        throw IoError("file too short for a NIfTI-1 header: " + path.string());
    }

    // sizeof_hdr doubles as the byte-order probe.
    bool swap = false;
    {
        ByteView probe(bytes.data(), false);
        if (probe.get<std::int32_t>(0) != kHeaderSize) {
            ByteView swapped(bytes.data(), true);
            if (swapped.get<std::int32_t>(0) != kHeaderSize) {
                throw IoError("not a NIfTI-1 file (sizeof_hdr != 348): " + path.string());
            }
            swap = true;
        }
    }
    ByteView hdr(bytes.data(), swap);

    const bool single_file = std::memcmp(bytes.data() + kOffMagic, "n+1\0", 4) == 0;
    const bool pair_file = std::memcmp(bytes.data() + kOffMagic, "ni1\0", 4) == 0;
    if (!single_file && !pair_file) {
        throw IoError("bad NIfTI-1 magic (expected \"n+1\" or \"ni1\"): " + path.string());
    }

    Image img;
    for (std::size_t d = 0; d < 8; ++d) {
        img.dim[d] = hdr.get<std::int16_t>(kOffDim + 2 * d);
        img.pixdim[d] = hdr.get<float>(kOffPixdim + 4 * d);
    }
    if (img.dim[0] < 1 || img.dim[0] > 7) {
        throw IoError("invalid dim[0] = " + std::to_string(img.dim[0]) + " in " + path.string());
    }
    for (std::int64_t d = 1; d <= img.dim[0]; ++d) {
        if (img.dim[d] < 1) {
            throw IoError("invalid dim[" + std::to_string(d) + "] = " + std::to_string(img.dim[d]) +
                          " in " + path.string());
        }
    }
    for (std::int64_t d = img.dim[0] + 1; d < 8; ++d) img.dim[d] = 1;
    for (std::int64_t d = 5; d <= img.dim[0]; ++d) {
        if (img.dim[d] != 1) {
            throw IoError("dimensions beyond 4 are not supported: " + path.string());
        }
    }

    const auto code = hdr.get<std::int16_t>(kOffDatatype);
    if (!is_supported(code)) {
        throw IoError("unsupported NIfTI datatype code " + std::to_string(code) +
                      " (supported: uint8, int16, int32, float32, float64): " + path.string());
    }
    img.datatype = static_cast<DataType>(code);
    img.scl_slope = hdr.get<float>(kOffSclSlope);
    img.scl_inter = hdr.get<float>(kOffSclInter);
    img.xyzt_units = bytes[kOffXyztUnits];

    const float vox_offset = hdr.get<float>(kOffVoxOffset);
    if (!(vox_offset >= 0.0F) || (single_file && vox_offset < static_cast<float>(kSingleFileOffset) &&
                                  vox_offset != 0.0F)) {
        throw IoError("invalid vox_offset in " + path.string());
    }

    std::vector<unsigned char> payload_store;
    unsigned char* payload = nullptr;
    std::size_t payload_size = 0;
    std::size_t offset = static_cast<std::size_t>(vox_offset);
    if (single_file) {
        if (offset == 0) offset = kSingleFileOffset;
        payload = bytes.data();
        payload_size = bytes.size();
    } else {
        payload_store = slurp(companion_image(path));
        payload = payload_store.data();
        payload_size = payload_store.size();
    }

    const std::size_t n = element_count(img.dim);
    const std::size_t width = bytes_per_value(img.datatype);
    if (payload_size < offset || (payload_size - offset) / width < n) {
        throw IoError("truncated data section: expected " + std::to_string(n * width) +
                      " bytes after offset " + std::to_string(offset) + ", found " +
                      std::to_string(payload_size > offset ? payload_size - offset : 0) + " in " +
                      path.string());
    }

    img.data.resize(n);
    const ByteView data(payload, swap);
    switch (img.datatype) {
        case DataType::UInt8: decode<std::uint8_t>(data, offset, n, img.data); break;
        case DataType::Int16: decode<std::int16_t>(data, offset, n, img.data); break;
        case DataType::Int32: decode<std::int32_t>(data, offset, n, img.data); break;
        case DataType::Float32: decode<float>(data, offset, n, img.data); break;
        case DataType::Float64: decode<double>(data, offset, n, img.data); break;
    }

    if (img.scl_slope != 0.0F && std::isfinite(img.scl_slope)) {
        const double slope = img.scl_slope;
        const double inter = std::isfinite(img.scl_inter) ? img.scl_inter : 0.0;
        for (auto& v : img.data) v = v * slope + inter;
    }
    return img;
}

void write_image(const Image& image, const std::filesystem::path& path, const WriteOptions& options) {
    const std::size_t n = element_count(image.dim);
    if (image.data.size() != n) {
        throw InvalidInput("image data size does not match its dimensions");
    }
    const std::size_t width = bytes_per_value(options.datatype);
    std::vector<unsigned char> bytes(kSingleFileOffset + n * width, 0);

    bool swap = options.big_endian;
    if constexpr (std::endian::native == std::endian::big) swap = !swap;
    ByteView hdr(bytes.data(), swap);

    hdr.put<std::int32_t>(0, kHeaderSize);
    bytes[38] = 'r';  // "regular"
    for (std::size_t d = 0; d < 8; ++d) {
        if (image.dim[d] > std::numeric_limits<std::int16_t>::max()) {
            throw InvalidInput("dimension too large for NIfTI-1: " + std::to_string(image.dim[d]));
        }
        hdr.put<std::int16_t>(kOffDim + 2 * d, static_cast<std::int16_t>(image.dim[d]));
        hdr.put<float>(kOffPixdim + 4 * d, image.pixdim[d]);
    }
    hdr.put<std::int16_t>(kOffDatatype, static_cast<std::int16_t>(options.datatype));
    hdr.put<std::int16_t>(kOffBitpix, static_cast<std::int16_t>(8 * width));
    hdr.put<float>(kOffVoxOffset, static_cast<float>(kSingleFileOffset));
    hdr.put<float>(kOffSclSlope, options.scl_slope);
    hdr.put<float>(kOffSclInter, options.scl_inter);
    bytes[kOffXyztUnits] = image.xyzt_units;
    std::memcpy(bytes.data() + kOffDescrip, "dvars", 5);
    std::memcpy(bytes.data() + kOffMagic, "n+1\0", 4);

    std::vector<double> stored = image.data;
    if (options.scl_slope != 0.0F) {
        const double slope = options.scl_slope;
        const double inter = options.scl_inter;
        for (auto& v : stored) v = (v - inter) / slope;
    }

    ByteView data(bytes.data(), swap);
    const std::size_t off = kSingleFileOffset;
    switch (options.datatype) {
        case DataType::UInt8: encode_integer<std::uint8_t>(data, off, stored, path); break;
        case DataType::Int16: encode_integer<std::int16_t>(data, off, stored, path); break;
        case DataType::Int32: encode_integer<std::int32_t>(data, off, stored, path); break;
        case DataType::Float32:
            for (std::size_t i = 0; i < n; ++i) data.put<float>(off + 4 * i, static_cast<float>(stored[i]));
            break;
        case DataType::Float64:
            for (std::size_t i = 0; i < n; ++i) data.put<double>(off + 8 * i, stored[i]);
            break;
    }
    spill(path, bytes);
}

TimeSeriesVolume load_nifti(const std::filesystem::path& path) {
    const Image img = read_image(path);
    const std::size_t frames = img.frame_count();
    if (frames < 2) {
        throw InvalidInput("time dimension < 2 in " + path.string() +
                           ": differencing needs at least two frames");
    }
    Geometry g;
    g.nx = static_cast<std::size_t>(img.dim[1]);
    g.ny = img.dim[0] >= 2 ? static_cast<std::size_t>(img.dim[2]) : 1;
    g.nz = img.dim[0] >= 3 ? static_cast<std::size_t>(img.dim[3]) : 1;
    g.voxel_size_mm = std::array<double, 3>{img.pixdim[1], img.pixdim[2], img.pixdim[3]};
    if (img.pixdim[4] > 0.0F) {
        g.repetition_time_s = static_cast<double>(img.pixdim[4]) * time_unit_seconds(img.xyzt_units);
    }

    const std::size_t voxels = g.voxel_count();
    std::vector<double> values(voxels * frames);
    for (std::size_t t = 0; t < frames; ++t) {
        const double* frame = img.data.data() + t * voxels;
        for (std::size_t i = 0; i < voxels; ++i) values[i * frames + t] = frame[i];
    }
    return TimeSeriesVolume(std::move(g), frames, std::move(values), path.string());
}

void write_nifti(const TimeSeriesVolume& volume, const std::filesystem::path& path,
                 const WriteOptions& options) {
    const auto& g = volume.geometry();
    Image img;
    img.dim = {4,
               static_cast<std::int64_t>(g.nx),
               static_cast<std::int64_t>(g.ny),
               static_cast<std::int64_t>(g.nz),
               static_cast<std::int64_t>(volume.frame_count()),
               1, 1, 1};
    img.pixdim = {1.0F, 1.0F, 1.0F, 1.0F, 0.0F, 0.0F, 0.0F, 0.0F};
    if (g.voxel_size_mm) {
        for (std::size_t d = 0; d < 3; ++d) img.pixdim[d + 1] = static_cast<float>((*g.voxel_size_mm)[d]);
    }
    img.xyzt_units = 2;  // mm
    if (g.repetition_time_s) {
        img.pixdim[4] = static_cast<float>(*g.repetition_time_s);
        img.xyzt_units |= 8;  // seconds
    }
    const std::size_t voxels = g.voxel_count();
    const std::size_t frames = volume.frame_count();
    img.data.resize(voxels * frames);
    for (std::size_t i = 0; i < voxels; ++i) {
        const auto tr = volume.trace(i);
        for (std::size_t t = 0; t < frames; ++t) img.data[t * voxels + i] = tr[t];
    }
    write_image(img, path, options);
}

Mask load_mask(const std::filesystem::path& path, const Geometry& expected) {
    const Image img = read_image(path);
    if (img.frame_count() != 1) {
        throw InvalidInput("mask must be 3D, but " + path.string() + " has " +
                           std::to_string(img.frame_count()) + " frames");
    }
    Geometry g;
    g.nx = static_cast<std::size_t>(img.dim[1]);
    g.ny = img.dim[0] >= 2 ? static_cast<std::size_t>(img.dim[2]) : 1;
    g.nz = img.dim[0] >= 3 ? static_cast<std::size_t>(img.dim[3]) : 1;
    if (!g.same_grid(expected)) {
        throw InvalidInput("mask geometry mismatch in " + path.string() + ": " +
                           describe_grid_mismatch(expected, g));
    }
    std::vector<std::uint8_t> inc(img.data.size());
    std::transform(img.data.begin(), img.data.end(), inc.begin(),
                   [](double v) { return static_cast<std::uint8_t>(v > 0.0 ? 1 : 0); });
    Mask m(expected, std::move(inc));
    if (m.count() == 0) {
        throw InvalidInput("mask " + path.string() + " is empty (no voxel > 0)");
    }
    return m;
}

void write_mask(const Mask& mask, const std::filesystem::path& path) {
    const auto& g = mask.geometry();
    Image img;
    img.dim = {3, static_cast<std::int64_t>(g.nx), static_cast<std::int64_t>(g.ny),
               static_cast<std::int64_t>(g.nz), 1, 1, 1, 1};
    img.pixdim = {1.0F, 1.0F, 1.0F, 1.0F, 0.0F, 0.0F, 0.0F, 0.0F};
    img.xyzt_units = 2;
    img.data.resize(g.voxel_count());
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = mask.contains(i) ? 1.0 : 0.0;
    write_image(img, path, WriteOptions{DataType::UInt8});
}

}  // namespace dvars::nifti
