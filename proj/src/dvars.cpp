#include "dvars/dvars.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "dvars/core_stats.hpp"
#include "dvars/error.hpp"
#include "dvars/parallel.hpp"

namespace dvars {

namespace {

// Fixed voxel block size of the frame-sum reduction. The reduction tree
// depends only on this constant and the voxel list, never on worker count.
constexpr std::size_t kVoxelBlock = 256;
constexpr std::size_t kEstimateBlock = 64;
constexpr double kDegenerateDiffVarFactor = 1e-12;

void require_same_grid(const TimeSeriesVolume& v, const Geometry& g, const char* what) {
    if (!v.geometry().same_grid(g)) {
        throw InvalidInput(std::string(what) + " geometry mismatch: " +
                           describe_grid_mismatch(v.geometry(), g));
    }
}

/**
 * Per frame t = 2..T: sum over `voxels` of weight * (Y_t - Y_{t-1})^2.
 * Each block of voxels accumulates sequentially in index order; block
 * partials are then combined pairwise.
 */
std::vector<double> frame_sums(const TimeSeriesVolume& v, std::span<const std::size_t> voxels,
                               std::optional<std::span<const double>> weights, unsigned workers) {
    const std::size_t pairs = v.frame_count() - 1;
    const std::size_t blocks = (voxels.size() + kVoxelBlock - 1) / kVoxelBlock;
    std::vector<std::vector<double>> partial(blocks, std::vector<double>(pairs, 0.0));

    parallel_for(blocks, workers, [&](std::size_t b) {
        auto& acc = partial[b];
        const std::size_t end = std::min(voxels.size(), (b + 1) * kVoxelBlock);
        for (std::size_t k = b * kVoxelBlock; k < end; ++k) {
            const auto y = v.trace(voxels[k]);
            const double w = weights ? (*weights)[k] : 1.0;
            for (std::size_t t = 0; t < pairs; ++t) {
                const double d = y[t + 1] - y[t];
                acc[t] += w * (d * d);
            }
        }
    });

    // Pairwise tree over blocks: stride 1, 2, 4, ...
    for (std::size_t stride = 1; stride < blocks; stride *= 2) {
        for (std::size_t b = 0; b + stride < blocks; b += 2 * stride) {
            auto& lhs = partial[b];
            const auto& rhs = partial[b + stride];
            for (std::size_t t = 0; t < pairs; ++t) lhs[t] += rhs[t];
        }
    }
    return blocks == 0 ? std::vector<double>(pairs, 0.0) : std::move(partial.front());
}

DvarsSeries rms_series(Variant variant, std::vector<double> sums, std::size_t count) {
    DvarsSeries out;
    out.variant = variant;
    out.voxels_used = count;
    const auto n = static_cast<double>(count);
    for (auto& s : sums) s = std::sqrt(s / n);
    out.values = std::move(sums);
    return out;
}

void require_params_within(const Mask& m, const VoxelNoiseParams& p) {
    if (!m.geometry().same_grid(p.geometry())) {
        throw InvalidInput("noise parameter geometry mismatch: " +
                           describe_grid_mismatch(m.geometry(), p.geometry()));
    }
    for (auto voxel : p.voxels()) {
        if (!m.contains(voxel)) {
            throw InvalidInput("noise parameters cover voxel " + std::to_string(voxel) +
                               " which is outside the mask");
        }
    }
}

}  // namespace

VoxelNoiseParams::VoxelNoiseParams(Geometry geometry, std::vector<std::size_t> voxels,
                                   std::vector<double> sigma, std::vector<double> rho,
                                   EstimatorMeta meta)
    : geometry_(std::move(geometry)),
      voxels_(std::move(voxels)),
      sigma_(std::move(sigma)),
      rho_(std::move(rho)),
      meta_(std::move(meta)) {
    if (sigma_.size() != voxels_.size() || rho_.size() != voxels_.size()) {
        throw InvalidInput("noise parameters: sigma, rho and voxel lists differ in length");
    }
    if (!std::is_sorted(voxels_.begin(), voxels_.end()) ||
        std::adjacent_find(voxels_.begin(), voxels_.end()) != voxels_.end()) {
        throw InvalidInput("noise parameters: voxel indices must be strictly ascending");
    }
    if (!voxels_.empty() && voxels_.back() >= geometry_.voxel_count()) {
        throw InvalidInput("noise parameters: voxel index outside the grid");
    }
    diff_var_.resize(voxels_.size());
    for (std::size_t k = 0; k < voxels_.size(); ++k) {
        diff_var_[k] = diff_variance_predicted(sigma_[k], rho_[k]);
    }
}

VoxelNoiseParams VoxelNoiseParams::supplied(const Mask& mask, std::span<const double> sigma,
                                            std::span<const double> rho) {
    EstimatorMeta meta;
    meta.supplied = true;
    return VoxelNoiseParams(mask.geometry(), mask.indices(),
                            std::vector<double>(sigma.begin(), sigma.end()),
                            std::vector<double>(rho.begin(), rho.end()), std::move(meta));
}

Mask VoxelNoiseParams::effective_mask() const { return Mask::from_indices(geometry_, voxels_); }

VoxelNoiseParams restrict_to(const VoxelNoiseParams& p, const Mask& m) {
    if (!m.geometry().same_grid(p.geometry())) {
        throw InvalidInput("noise parameter geometry mismatch: " +
                           describe_grid_mismatch(m.geometry(), p.geometry()));
    }
    std::vector<std::size_t> voxels;
    std::vector<double> sigma;
    std::vector<double> rho;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (m.contains(p.voxels()[k])) {
            voxels.push_back(p.voxels()[k]);
            sigma.push_back(p.sigma()[k]);
            rho.push_back(p.rho()[k]);
        }
    }
    return VoxelNoiseParams(p.geometry(), std::move(voxels), std::move(sigma), std::move(rho), p.meta());
}

std::size_t min_frames_for_estimation(const EstimationOptions& options) noexcept {
    // The lag-1 estimator needs three samples; a removed trend costs one more
    // degree of freedom before the residual correlation means anything.
    return options.detrend ? 4 : 3;
}

VoxelNoiseParams estimate_noise_params(const TimeSeriesVolume& v, const Mask& m,
                                       const EstimationOptions& options) {
    require_same_grid(v, m.geometry(), "mask");
    if (m.count() == 0) throw InvalidInput("estimate_noise_params: empty mask");
    const std::size_t need = min_frames_for_estimation(options);
    if (v.frame_count() < need) {
        throw InvalidInput("noise parameter estimation needs at least " + std::to_string(need) +
                           " frames" + (options.detrend ? " with detrending" : "") + ", got " +
                           std::to_string(v.frame_count()));
    }

    const auto voxels = m.indices();
    std::vector<double> sigma(voxels.size());
    std::vector<double> rho(voxels.size());
    std::vector<std::uint8_t> ok(voxels.size(), 1);

    const std::size_t blocks = (voxels.size() + kEstimateBlock - 1) / kEstimateBlock;
    parallel_for(blocks, options.workers, [&](std::size_t b) {
        const std::size_t end = std::min(voxels.size(), (b + 1) * kEstimateBlock);
        for (std::size_t k = b * kEstimateBlock; k < end; ++k) {
            try {
                Series s(v.trace(voxels[k]));
                if (options.detrend) s = detrend_linear(s);
                rho[k] = ar1_coeff(s);
                sigma[k] = options.robust_sigma ? robust_sd_iqr(s) : sample_sd(s);
            } catch (const DegenerateInput&) {
                ok[k] = 0;
            }
        }
    });

    EstimatorMeta meta;
    meta.robust_sigma = options.robust_sigma;
    meta.detrend = options.detrend;
    std::vector<std::size_t> kept;
    std::vector<double> kept_sigma;
    std::vector<double> kept_rho;
    for (std::size_t k = 0; k < voxels.size(); ++k) {
        if (ok[k]) {
            kept.push_back(voxels[k]);
            kept_sigma.push_back(sigma[k]);
            kept_rho.push_back(rho[k]);
        } else {
            meta.excluded_voxels.push_back(voxels[k]);
        }
    }
    if (kept.empty()) {
        throw DegenerateInput("noise parameters undefined for every masked voxel (" +
                              std::to_string(voxels.size()) + " constant traces)");
    }
    return VoxelNoiseParams(v.geometry(), std::move(kept), std::move(kept_sigma),
                            std::move(kept_rho), std::move(meta));
}

double expected_dvars_sq(const VoxelNoiseParams& p) {
    if (p.empty()) throw InvalidInput("expected_dvars_sq: no voxels");
    return pairwise_sum(p.diff_var()) / static_cast<double>(p.size());
}

const char* to_string(Variant v) noexcept {
    switch (v) {
        case Variant::Raw: return "dvars";
        case Variant::Star: return "dvars_star";
        case Variant::StarStar: return "dvars_star_star";
    }
    return "unknown";
}

DvarsSeries dvars(const TimeSeriesVolume& v, const Mask& m, unsigned workers) {
    require_same_grid(v, m.geometry(), "mask");
    if (m.count() == 0) throw InvalidInput("dvars: empty mask");
    const auto voxels = m.indices();
    return rms_series(Variant::Raw, frame_sums(v, voxels, std::nullopt, workers), voxels.size());
}

DvarsSeries dvars_standardized(const TimeSeriesVolume& v, const Mask& m, const VoxelNoiseParams& p,
                               unsigned workers) {
    require_same_grid(v, m.geometry(), "mask");
    require_params_within(m, p);
    if (p.empty()) throw InvalidInput("dvars_standardized: no noise parameters");
    const double expected = expected_dvars_sq(p);
    if (!(expected > 0.0)) {
        throw DegenerateInput("null variance is zero; check mask/estimators");
    }
    DvarsSeries out = dvars(v, p.effective_mask(), workers);
    out.variant = Variant::Star;
    const double scale = std::sqrt(expected);
    for (auto& x : out.values) x /= scale;
    return out;
}

DvarsSeries dvars_voxel_standardized(const TimeSeriesVolume& v, const Mask& m,
                                     const VoxelNoiseParams& p, unsigned workers) {
    require_same_grid(v, m.geometry(), "mask");
    require_params_within(m, p);
    if (p.empty()) throw InvalidInput("dvars_voxel_standardized: no noise parameters");

    const double floor = kDegenerateDiffVarFactor * median(Series(p.diff_var()));
    std::vector<std::size_t> kept;
    std::vector<double> weights;
    for (std::size_t k = 0; k < p.size(); ++k) {
        const double dv = p.diff_var()[k];
        if (dv > floor && dv > 0.0) {
            kept.push_back(p.voxels()[k]);
            weights.push_back(1.0 / dv);
        }
    }
    if (kept.empty()) {
        throw DegenerateInput("every voxel has zero predicted difference variance; DVARS** undefined");
    }
    DvarsSeries out = rms_series(Variant::StarStar,
                                 frame_sums(v, kept, std::span<const double>(weights), workers),
                                 kept.size());
    out.voxels_excluded = p.size() - kept.size();
    return out;
}

}  // namespace dvars
