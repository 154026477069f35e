#include "dvars/pipeline.hpp"

#include <sstream>

#include "dvars/error.hpp"
#include "dvars/mask.hpp"

namespace dvars {

VariantSelection parse_variants(std::string_view text) {
    VariantSelection sel{false, false, false};
    std::istringstream in{std::string(text)};
    for (std::string item; std::getline(in, item, ',');) {
        if (item == "raw") sel.raw = true;
        else if (item == "star") sel.star = true;
        else if (item == "starstar") sel.star_star = true;
        else throw InvalidInput("unknown variant \"" + item + "\" (expected raw, star, starstar)");
    }
    if (!sel.raw && !sel.star && !sel.star_star) throw InvalidInput("no DVARS variant selected");
    return sel;
}

QcReport run_qc(const TimeSeriesVolume& v, const Mask& mask, const ComputeOptions& options) {
    if (!v.geometry().same_grid(mask.geometry())) {
        throw InvalidInput("mask geometry mismatch: " +
                           describe_grid_mismatch(v.geometry(), mask.geometry()));
    }
    if (mask.count() == 0) throw InvalidInput("mask is empty");

    QcReport report;
    auto& meta = report.meta;
    meta.version = kToolVersion;
    meta.input = options.input_label.empty() ? v.source() : options.input_label;
    meta.mask = options.mask_label;
    meta.robust_sigma = options.estimation.robust_sigma;
    meta.detrend = options.estimation.detrend;
    meta.rho_estimator = "lag-1 standard (no robust estimator)";
    meta.flag_policy = to_string(options.policy);
    meta.voxels = mask.count();
    meta.frames = v.frame_count();
    meta.params_source = "none";
    meta.assumptions = {
        "noise covariance is separable into spatial and temporal factors (not verified)",
        "voxel noise is AR(1) around a constant mean",
    };

    const std::size_t pairs = v.frame_count() - 1;
    report.frames.resize(pairs);
    for (std::size_t k = 0; k < pairs; ++k) report.frames[k].frame = k + 2;

    if (options.variants.raw) {
        const auto raw = dvars(v, mask, options.workers);
        for (std::size_t k = 0; k < pairs; ++k) report.frames[k].dvars = raw.values[k];
    }

    const bool flagging = !std::holds_alternative<flag_policy::None>(options.policy);
    const bool want_params = options.variants.star || options.variants.star_star || flagging;

    std::optional<VoxelNoiseParams> params;
    if (want_params) {
        try {
            if (options.supplied_params) {
                params = restrict_to(*options.supplied_params, mask);
                if (params->empty()) throw InvalidInput("supplied parameters cover no masked voxel");
                meta.params_source = "supplied";
            } else {
                const Mask usable = mask.intersect(derive_mask(v, mask_strategy::Nonconstant{}));
                EstimationOptions est = options.estimation;
                est.workers = options.workers;
                params = estimate_noise_params(v, usable, est);
                meta.params_source = "estimated";
                report.summary.excluded_degenerate =
                    (mask.count() - usable.count()) + params->meta().excluded_voxels.size();
            }
            meta.effective_voxels = params->size();
        } catch (const Error& e) {
            meta.warnings.push_back(std::string("standardized variants skipped: ") + e.what());
        }
    }

    std::optional<DvarsSeries> star;
    if (params) {
        try {
            star = dvars_standardized(v, mask, *params, options.workers);
            if (options.variants.star) {
                for (std::size_t k = 0; k < pairs; ++k) report.frames[k].dvars_star = star->values[k];
            }
        } catch (const Error& e) {
            meta.warnings.push_back(std::string("DVARS* skipped: ") + e.what());
        }
        if (options.variants.star_star) {
            try {
                const auto ss = dvars_voxel_standardized(v, mask, *params, options.workers);
                for (std::size_t k = 0; k < pairs; ++k) report.frames[k].dvars_star_star = ss.values[k];
                report.summary.excluded_star_star = ss.voxels_excluded;
            } catch (const Error& e) {
                meta.warnings.push_back(std::string("DVARS** skipped: ") + e.what());
            }
        }
    }

    if (flagging) {
        if (star) {
            auto result = flag_outliers(star->values, options.policy);
            for (std::size_t k = 0; k < pairs; ++k) report.frames[k].flag = result.flags[k];
            meta.flag_policy = to_string(result.applied);
            for (auto& w : result.warnings) meta.warnings.push_back(std::move(w));
        } else {
            meta.warnings.push_back("flagging skipped: DVARS* unavailable");
        }
    }

    summarize(report);
    return report;
}

}  // namespace dvars
