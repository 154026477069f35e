#include "dvars/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <cmath>
#include <random>
#include <sstream>

#include "dvars/error.hpp"
#include "dvars/parallel.hpp"

namespace dvars {

namespace rng {

std::uint64_t mix(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) noexcept {
    return mix(mix(mix(seed) ^ stream) ^ index);
}

}  // namespace rng

namespace {

constexpr std::uint64_t kVoxelStream = 0;
constexpr std::uint64_t kSpikeStream = 1;

// mt19937_64 output is fixed by the standard; the uniform and normal
// transforms below are spelled out so every platform draws the same values
// (std::normal_distribution is implementation-defined).
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(const Range& r) {
        const double u = uniform();
        return r.is_constant() ? r.lo : r.lo + (r.hi - r.lo) * u;
    }

    /// Standard normal, Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        double v = 0.0;
        double s = 0.0;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

void check_range(const Range& r, const char* name) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) {
        throw InvalidInput(std::string("simulation spec: ") + name + " must be finite");
    }
    if (r.lo > r.hi) {
        throw InvalidInput(std::string("simulation spec: ") + name + " range has lo > hi");
    }
}

double parse_number(std::string_view text, const std::string& key) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw InvalidInput("simulation spec: " + key + ": not a number: \"" + std::string(text) + "\"");
    }
    return v;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::istringstream in{std::string(text)};
    for (std::string w; in >> w;) words.push_back(w);
    return words;
}

std::size_t parse_count(std::string_view text, const std::string& key) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw InvalidInput("simulation spec: " + key + ": expected a non-negative integer, got \"" +
                           std::string(text) + "\"");
    }
    return v;
}

Range parse_range(std::string_view value, const std::string& key) {
    const auto words = split_words(value);
    if (words.size() == 1) return Range::constant(parse_number(words[0], key));
    if (words.size() == 2) return {parse_number(words[0], key), parse_number(words[1], key)};
    throw InvalidInput("simulation spec: " + key + ": expected \"value\" or \"lo hi\"");
}

}  // namespace

void validate(const SimulationSpec& spec) {
    const auto& g = spec.geometry;
    if (g.nx == 0 || g.ny == 0 || g.nz == 0) {
        throw InvalidInput("simulation spec: nx, ny and nz must all be >= 1");
    }
    if (spec.frames < 2) throw InvalidInput("simulation spec: frames must be >= 2");
    check_range(spec.mu, "mu");
    check_range(spec.sigma, "sigma");
    check_range(spec.rho, "rho");
    if (!(spec.sigma.lo > 0.0)) {
        throw InvalidInput("simulation spec: sigma must be strictly positive");
    }
    if (!(spec.rho.lo > -1.0 && spec.rho.hi < 1.0)) {
        throw InvalidInput("simulation spec: rho must lie strictly inside (-1, 1) for a stationary AR(1)");
    }
    for (const auto& a : spec.artifacts) {
        if (const auto* s = std::get_if<artifact::Spike>(&a)) {
            if (s->frame < 1 || s->frame > spec.frames) {
                throw InvalidInput("simulation spec: spike frame " + std::to_string(s->frame) +
                                   " outside 1.." + std::to_string(spec.frames));
            }
            if (!(s->factor >= 0.0) || !std::isfinite(s->factor)) {
                throw InvalidInput("simulation spec: spike factor must be finite and >= 0");
            }
        } else if (!std::isfinite(std::get<artifact::Drift>(a).slope)) {
            throw InvalidInput("simulation spec: drift slope must be finite");
        }
    }
}

SimulationSpec parse_simulation_spec(std::string_view text) {
    SimulationSpec spec;
    std::istringstream in{std::string(text)};
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto words = split_words(line);
        if (words.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw InvalidInput("simulation spec line " + std::to_string(line_no) +
                               ": expected key = value");
        }
        const auto key_words = split_words(line.substr(0, eq));
        if (key_words.size() != 1) {
            throw InvalidInput("simulation spec line " + std::to_string(line_no) + ": bad key");
        }
        const std::string& key = key_words[0];
        const std::string value = line.substr(eq + 1);
        const auto vw = split_words(value);
        const auto single = [&]() -> const std::string& {
            if (vw.size() != 1) throw InvalidInput("simulation spec: " + key + ": expected one value");
            return vw[0];
        };

        if (key == "nx") spec.geometry.nx = parse_count(single(), key);
        else if (key == "ny") spec.geometry.ny = parse_count(single(), key);
        else if (key == "nz") spec.geometry.nz = parse_count(single(), key);
        else if (key == "frames") spec.frames = parse_count(single(), key);
        else if (key == "seed") spec.seed = parse_count(single(), key);
        else if (key == "tr") spec.geometry.repetition_time_s = parse_number(single(), key);
        else if (key == "voxel_size") {
            if (vw.size() != 3) throw InvalidInput("simulation spec: voxel_size: expected three values");
            spec.geometry.voxel_size_mm = std::array<double, 3>{
                parse_number(vw[0], key), parse_number(vw[1], key), parse_number(vw[2], key)};
        } else if (key == "mu") spec.mu = parse_range(value, key);
        else if (key == "sigma") spec.sigma = parse_range(value, key);
        else if (key == "rho") spec.rho = parse_range(value, key);
        else if (key == "spike") {
            if (vw.size() != 2) throw InvalidInput("simulation spec: spike: expected \"frame factor\"");
            spec.artifacts.emplace_back(artifact::Spike{parse_count(vw[0], key), parse_number(vw[1], key)});
        } else if (key == "drift") {
            spec.artifacts.emplace_back(artifact::Drift{parse_number(single(), key)});
        } else {
            throw InvalidInput("simulation spec line " + std::to_string(line_no) + ": unknown key \"" +
                               key + "\"");
        }
    }
    validate(spec);
    return spec;
}

VoxelNoiseParams SimulatedVolume::truth() const {
    EstimatorMeta meta;
    meta.supplied = true;
    const auto& g = volume.geometry();
    std::vector<std::size_t> all(g.voxel_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return VoxelNoiseParams(g, std::move(all), sigma, rho, std::move(meta));
}

SimulatedVolume simulate_ar1_volume(const SimulationSpec& spec, unsigned workers) {
    validate(spec);
    const std::size_t voxels = spec.geometry.voxel_count();
    const std::size_t frames = spec.frames;
    std::vector<double> values(voxels * frames);
    std::vector<double> mu(voxels);
    std::vector<double> sigma(voxels);
    std::vector<double> rho(voxels);

    constexpr std::size_t kBlock = 64;
    parallel_for((voxels + kBlock - 1) / kBlock, workers, [&](std::size_t b) {
        const std::size_t end = std::min(voxels, (b + 1) * kBlock);
        for (std::size_t i = b * kBlock; i < end; ++i) {
            Stream s(rng::substream_seed(spec.seed, kVoxelStream, i));
            mu[i] = s.uniform(spec.mu);
            sigma[i] = s.uniform(spec.sigma);
            rho[i] = s.uniform(spec.rho);
            const double innovation_sd = sigma[i] * std::sqrt(1.0 - rho[i] * rho[i]);
            double* y = values.data() + i * frames;
            double e = sigma[i] * s.normal();
            y[0] = mu[i] + e;
            for (std::size_t t = 1; t < frames; ++t) {
                e = rho[i] * e + innovation_sd * s.normal();
                y[t] = mu[i] + e;
            }
        }
    });

    TimeSeriesVolume volume(spec.geometry, frames, std::move(values), "simulated");
    for (std::size_t a = 0; a < spec.artifacts.size(); ++a) {
        if (const auto* spike = std::get_if<artifact::Spike>(&spec.artifacts[a])) {
            volume = inject_spike(volume, sigma, spike->frame, spike->factor,
                                  rng::substream_seed(spec.seed, kSpikeStream, a));
        } else {
            volume = inject_drift(volume, std::get<artifact::Drift>(spec.artifacts[a]).slope);
        }
    }
    return {std::move(volume), std::move(mu), std::move(sigma), std::move(rho)};
}

TimeSeriesVolume inject_spike(const TimeSeriesVolume& v, std::span<const double> sigma,
                              std::size_t frame, double factor, std::uint64_t seed) {
    if (frame < 1 || frame > v.frame_count()) {
        throw InvalidInput("spike frame " + std::to_string(frame) + " outside 1.." +
                           std::to_string(v.frame_count()));
    }
    if (sigma.size() != v.voxel_count()) {
        throw InvalidInput("inject_spike: need one sigma per voxel");
    }
    if (!(factor >= 0.0) || !std::isfinite(factor)) {
        throw InvalidInput("inject_spike: factor must be finite and >= 0");
    }
    TimeSeriesVolume out = v;
    if (factor == 0.0) return out;
    for (std::size_t i = 0; i < v.voxel_count(); ++i) {
        if (sigma[i] == 0.0) continue;
        Stream s(rng::substream_seed(seed, kSpikeStream, i));
        out.mutable_trace(i)[frame - 1] += factor * sigma[i] * s.normal();
    }
    return out;
}

TimeSeriesVolume inject_drift(const TimeSeriesVolume& v, double slope) {
    TimeSeriesVolume out = v;
    if (slope == 0.0) return out;
    for (std::size_t i = 0; i < v.voxel_count(); ++i) {
        auto y = out.mutable_trace(i);
        for (std::size_t t = 0; t < y.size(); ++t) y[t] += slope * static_cast<double>(t + 1);
    }
    return out;
}

}  // namespace dvars

namespace dvars {

std::string params_sidecar_text(const SimulatedVolume& sim) {
    std::string out = "voxel\tmu\tsigma\trho\n";
    char buf[128];
    for (std::size_t i = 0; i < sim.mu.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu\t%.17g\t%.17g\t%.17g\n", i, sim.mu[i], sim.sigma[i], sim.rho[i]);
        out += buf;
    }
    return out;
}

VoxelNoiseParams load_params_sidecar(const std::filesystem::path& path, const Geometry& geometry) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open parameter file " + path.string());
    const std::size_t n = geometry.voxel_count();
    std::vector<double> sigma(n);
    std::vector<double> rho(n);
    std::vector<std::uint8_t> seen(n, 0);
    std::string line;
    std::getline(in, line);
    if (line.rfind("voxel", 0) != 0) {
        throw IoError(path.string() + ": expected header \"voxel\tmu\tsigma\trho\"");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::size_t voxel = 0;
        double mu = 0.0;
        double s = 0.0;
        double r = 0.0;
        if (!(row >> voxel >> mu >> s >> r) || voxel >= n || seen[voxel]) {
            throw IoError(path.string() + ": bad parameter row " + std::to_string(line_no));
        }
        seen[voxel] = 1;
        sigma[voxel] = s;
        rho[voxel] = r;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        throw IoError(path.string() + ": parameters missing for some voxels");
    }
    EstimatorMeta meta;
    meta.supplied = true;
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return VoxelNoiseParams(geometry, std::move(all), std::move(sigma), std::move(rho), std::move(meta));
}

}  // namespace dvars
