#include "dvars/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <set>

#include "dvars/core_stats.hpp"
#include "dvars/dvars.hpp"
#include "dvars/error.hpp"
#include "dvars/mask.hpp"
#include "dvars/pipeline.hpp"
#include "dvars/report.hpp"
#include "dvars/simulate.hpp"
#include "dvars/tsv.hpp"

namespace dvars {

namespace {

constexpr std::uint64_t kBaseSeed = 20130912;
constexpr double kForcedSigmaInflation = 1.25;

std::string fmt(const char* pattern, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, pattern, a, b);
    return buf;
}

SimulationSpec null_spec(const AcceptanceScale& scale, std::uint64_t seed) {
    SimulationSpec spec;
    spec.geometry.nx = scale.voxels;
    spec.frames = scale.frames;
    spec.mu = {500.0, 1500.0};
    spec.sigma = {5.0, 20.0};
    spec.rho = {0.0, 0.5};
    spec.seed = seed;
    return spec;
}

VoxelNoiseParams maybe_perturb(const VoxelNoiseParams& p, bool force_fail) {
    if (!force_fail) return p;
    std::vector<double> sigma(p.sigma().begin(), p.sigma().end());
    for (auto& s : sigma) s *= kForcedSigmaInflation;
    return VoxelNoiseParams(p.geometry(), std::vector<std::size_t>(p.voxels().begin(), p.voxels().end()),
                            std::move(sigma), std::vector<double>(p.rho().begin(), p.rho().end()),
                            p.meta());
}

double mean_of_squares(const DvarsSeries& s) {
    std::vector<double> sq(s.values.size());
    std::transform(s.values.begin(), s.values.end(), sq.begin(), [](double x) { return x * x; });
    return pairwise_sum(sq) / static_cast<double>(sq.size());
}

double max_rel_diff(const std::vector<FrameRecord>& a, const std::vector<FrameRecord>& b,
                    std::optional<double> FrameRecord::*column, double scale = 1.0) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double x = *(a[k].*column) * scale;
        const double y = *(b[k].*column);
        worst = std::max(worst, std::abs(x - y) / std::abs(x));
    }
    return worst;
}

ComputeOptions plain_options(unsigned workers) {
    ComputeOptions o;
    o.policy = flag_policy::None{};
    o.workers = workers;
    return o;
}

/// Default pipeline on a volume, with the forced-failure perturbation
/// applied to the estimated parameters when requested.
QcReport default_run(const TimeSeriesVolume& v, const SelftestOptions& opt) {
    const Mask mask = derive_mask(v, mask_strategy::MeanFraction{0.1});
    ComputeOptions o;
    o.workers = opt.workers;
    if (opt.force_fail) {
        const Mask usable = mask.intersect(derive_mask(v, mask_strategy::Nonconstant{}));
        EstimationOptions est;
        est.workers = opt.workers;
        o.supplied_params = maybe_perturb(estimate_noise_params(v, usable, est), true);
    }
    return run_qc(v, mask, o);
}

CriterionResult null_calibration(const SelftestOptions& opt) {
    CriterionResult r{1, "null calibration of DVARS* (estimated and true params)", true, {}};
    double lo_est = 1e300, hi_est = -1e300, lo_true = 1e300, hi_true = -1e300;
    for (std::size_t s = 0; s < opt.scale.seeds; ++s) {
        const auto sim = simulate_ar1_volume(null_spec(opt.scale, kBaseSeed + s), opt.workers);
        const auto report = default_run(sim.volume, opt);
        const double est_mean = report.summary.dvars_star ? report.summary.dvars_star->mean : 0.0;

        const auto truth = maybe_perturb(sim.truth(), opt.force_fail);
        const auto star = dvars_standardized(sim.volume, Mask::all(sim.volume.geometry()), truth, opt.workers);
        const double true_ms = mean_of_squares(star);

        lo_est = std::min(lo_est, est_mean);
        hi_est = std::max(hi_est, est_mean);
        lo_true = std::min(lo_true, true_ms);
        hi_true = std::max(hi_true, true_ms);
        if (!(est_mean >= 0.95 && est_mean <= 1.05) || !(true_ms >= 0.97 && true_ms <= 1.03)) r.passed = false;
    }
    r.detail = fmt("mean DVARS* (estimated) in [%.6g, %.6g]", lo_est, hi_est) +
               fmt("; mean DVARS*^2 (true) in [%.6g, %.6g]", lo_true, hi_true);
    return r;
}

CriterionResult star_star_calibration(const SelftestOptions& opt) {
    CriterionResult r{2, "null calibration of DVARS** (true params)", true, {}};
    double lo = 1e300, hi = -1e300;
    for (std::size_t s = 0; s < opt.scale.seeds; ++s) {
        const auto sim = simulate_ar1_volume(null_spec(opt.scale, kBaseSeed + s), opt.workers);
        const auto truth = maybe_perturb(sim.truth(), opt.force_fail);
        const auto ss =
            dvars_voxel_standardized(sim.volume, Mask::all(sim.volume.geometry()), truth, opt.workers);
        const double ms = mean_of_squares(ss);
        lo = std::min(lo, ms);
        hi = std::max(hi, ms);
        if (!(ms >= 0.97 && ms <= 1.03)) r.passed = false;
    }
    r.detail = fmt("mean DVARS**^2 in [%.6g, %.6g]", lo, hi);
    return r;
}

CriterionResult mu_cancellation(const SelftestOptions& opt) {
    CriterionResult r{3, "mean-image cancellation", true, {}};
    const auto sim = simulate_ar1_volume(null_spec(opt.scale, kBaseSeed + 100), opt.workers);
    const auto& v = sim.volume;
    std::vector<double> shifted(v.values().begin(), v.values().end());
    for (std::size_t i = 0; i < v.voxel_count(); ++i) {
        // Any fixed field works; this one spans [-1000, 5000).
        const double frac = std::fmod(static_cast<double>(i) * 0.6180339887498949, 1.0);
        const double mu = -1000.0 + 6000.0 * frac;
        for (std::size_t t = 0; t < v.frame_count(); ++t) shifted[i * v.frame_count() + t] += mu;
    }
    const TimeSeriesVolume w(v.geometry(), v.frame_count(), std::move(shifted));
    const Mask all = Mask::all(v.geometry());
    const auto a = run_qc(v, all, plain_options(opt.workers));
    const auto b = run_qc(w, all, plain_options(opt.workers));
    const double worst = std::max({max_rel_diff(a.frames, b.frames, &FrameRecord::dvars),
                                   max_rel_diff(a.frames, b.frames, &FrameRecord::dvars_star),
                                   max_rel_diff(a.frames, b.frames, &FrameRecord::dvars_star_star)});
    r.passed = worst < 1e-10;
    r.detail = fmt("max relative change %.3g (limit 1e-10)", worst);
    return r;
}

CriterionResult scale_invariance(const SelftestOptions& opt) {
    CriterionResult r{4, "scale invariance", true, {}};
    const auto sim = simulate_ar1_volume(null_spec(opt.scale, kBaseSeed + 200), opt.workers);
    const auto& v = sim.volume;
    const Mask all = Mask::all(v.geometry());
    const auto base = run_qc(v, all, plain_options(opt.workers));
    double worst_std = 0.0;
    double worst_raw = 0.0;
    for (double c : {0.01, 1.0, 1000.0}) {
        std::vector<double> scaled(v.values().begin(), v.values().end());
        for (auto& x : scaled) x *= c;
        const TimeSeriesVolume w(v.geometry(), v.frame_count(), std::move(scaled));
        const auto rep = run_qc(w, all, plain_options(opt.workers));
        worst_std = std::max({worst_std, max_rel_diff(base.frames, rep.frames, &FrameRecord::dvars_star),
                              max_rel_diff(base.frames, rep.frames, &FrameRecord::dvars_star_star)});
        worst_raw = std::max(worst_raw, max_rel_diff(base.frames, rep.frames, &FrameRecord::dvars, std::abs(c)));
    }
    r.passed = worst_std < 1e-6 && worst_raw < 1e-12;
    r.detail = fmt("standardized max rel change %.3g (limit 1e-6); raw vs |c| scaling %.3g (limit 1e-12)",
                   worst_std, worst_raw);
    return r;
}

CriterionResult hand_oracle(const SelftestOptions& opt) {
    CriterionResult r{5, "two-voxel hand oracle", true, {}};
    const auto v = parse_tsv_matrix("1\t3\t2\n2\t2\t4\n", "fixture");
    const auto d = dvars(v, Mask::all(v.geometry()), opt.workers);
    const double e0 = std::abs(d.values[0] - std::sqrt(2.0)) / std::sqrt(2.0);
    const double e1 = std::abs(d.values[1] - std::sqrt(2.5)) / std::sqrt(2.5);
    r.passed = d.values.size() == 2 && e0 < 1e-12 && e1 < 1e-12;
    r.detail = fmt("DVARS = (%.12g, ", d.values[0]) + fmt("%.12g)", d.values[1]);
    return r;
}

CriterionResult difference_variance_law(const SelftestOptions& opt) {
    CriterionResult r{6, "difference-variance law 2(1-rho)sigma^2", true, {}};
    double worst = 0.0;
    std::uint64_t seed = kBaseSeed + 300;
    for (double sigma : {1.0, 10.0}) {
        for (double rho : {0.0, 0.3, 0.7}) {
            SimulationSpec spec;
            spec.frames = opt.scale.long_frames;
            spec.mu = Range::constant(0.0);
            spec.sigma = Range::constant(sigma);
            spec.rho = Range::constant(rho);
            spec.seed = seed++;
            const auto sim = simulate_ar1_volume(spec, opt.workers);
            const auto y = sim.volume.trace(0);
            std::vector<double> diffs(y.size() - 1);
            for (std::size_t t = 1; t < y.size(); ++t) diffs[t - 1] = y[t] - y[t - 1];
            const double sd = sample_sd(Series(diffs));
            const double predicted = diff_variance_predicted(sigma, rho);
            worst = std::max(worst, std::abs(sd * sd - predicted) / predicted);
        }
    }
    r.passed = worst < 0.05;
    r.detail = fmt("max relative error %.4g (limit 0.05)", worst);
    return r;
}

CriterionResult robust_sigma(const SelftestOptions& opt) {
    CriterionResult r{7, "robust sigma under contamination", true, {}};
    constexpr double kSigma = 10.0;
    SimulationSpec spec;
    spec.mu = Range::constant(0.0);
    spec.sigma = Range::constant(kSigma);
    spec.rho = Range::constant(0.0);

    spec.frames = opt.scale.robust_samples;
    spec.seed = kBaseSeed + 400;
    const auto dirty_sim = simulate_ar1_volume(spec, opt.workers);
    std::vector<double> dirty(dirty_sim.volume.trace(0).begin(), dirty_sim.volume.trace(0).end());
    // Every 20th sample (5%) replaced by an outlier at +/- 10 sigma.
    for (std::size_t t = 0; t < dirty.size(); t += 20) {
        dirty[t] = (t / 20) % 2 == 0 ? 10.0 * kSigma : -10.0 * kSigma;
    }
    const double robust_err = std::abs(robust_sd_iqr(Series(dirty)) - kSigma) / kSigma;
    const double sd_err = std::abs(sample_sd(Series(dirty)) - kSigma) / kSigma;

    spec.frames = opt.scale.clean_samples;
    spec.seed = kBaseSeed + 401;
    const auto clean_sim = simulate_ar1_volume(spec, opt.workers);
    const Series clean(clean_sim.volume.trace(0));
    const double sd_clean = sample_sd(clean);
    const double agree = std::abs(robust_sd_iqr(clean) - sd_clean) / sd_clean;

    r.passed = robust_err < 0.10 && sd_err > 0.50 && agree < 0.05;
    r.detail = fmt("contaminated: IQR error %.4g, SD error %.4g", robust_err, sd_err) +
               fmt("; clean disagreement %.4g", agree);
    return r;
}

CriterionResult spike_detection(const SelftestOptions& opt) {
    CriterionResult r{8, "spike detection with robust-z(5)", true, {}};
    const std::size_t spike_frame = opt.scale.frames / 2;
    std::size_t hits = 0;
    std::size_t false_positives = 0;
    for (std::size_t s = 0; s < opt.scale.seeds; ++s) {
        auto spec = null_spec(opt.scale, kBaseSeed + 500 + s);
        spec.artifacts.emplace_back(artifact::Spike{spike_frame, 2.0});
        const auto sim = simulate_ar1_volume(spec, opt.workers);
        const auto report = default_run(sim.volume, opt);
        for (const auto& f : report.frames) {
            const bool expected = f.frame == spike_frame || f.frame == spike_frame + 1;
            if (f.flag && expected) ++hits;
            if (f.flag && !expected) ++false_positives;
        }
    }
    r.passed = hits == 2 * opt.scale.seeds && false_positives == 0;
    r.detail = "flagged " + std::to_string(hits) + "/" + std::to_string(2 * opt.scale.seeds) +
               " spike frames, " + std::to_string(false_positives) + " false positives";
    return r;
}

CriterionResult determinism(const SelftestOptions& opt) {
    CriterionResult r{9, "bit-identical runs across repeats and worker counts", true, {}};
    auto spec = null_spec(opt.scale, kBaseSeed + 600);
    spec.artifacts.emplace_back(artifact::Spike{spec.frames / 3, 2.0});
    std::vector<std::string> outputs;
    std::vector<std::vector<double>> volumes;
    for (unsigned workers : {1U, 4U, 1U, 4U}) {
        const auto sim = simulate_ar1_volume(spec, workers);
        SelftestOptions o = opt;
        o.workers = workers;
        const auto report = default_run(sim.volume, o);
        outputs.push_back(report_to_json(report) + report_to_tsv(report));
        volumes.emplace_back(sim.volume.values().begin(), sim.volume.values().end());
    }
    for (std::size_t k = 1; k < outputs.size(); ++k) {
        const bool same_volume =
            volumes[k].size() == volumes[0].size() &&
            std::memcmp(volumes[k].data(), volumes[0].data(), volumes[0].size() * sizeof(double)) == 0;
        if (outputs[k] != outputs[0] || !same_volume) r.passed = false;
    }
    r.detail = r.passed ? "4 runs (workers 1,4,1,4) identical" : "runs differ";
    return r;
}

}  // namespace

CriterionResult run_criterion(int id, const SelftestOptions& options) {
    try {
        switch (id) {
            case 1: return null_calibration(options);
            case 2: return star_star_calibration(options);
            case 3: return mu_cancellation(options);
            case 4: return scale_invariance(options);
            case 5: return hand_oracle(options);
            case 6: return difference_variance_law(options);
            case 7: return robust_sigma(options);
            case 8: return spike_detection(options);
            case 9: return determinism(options);
            default: break;
        }
    } catch (const std::exception& e) {
        return {id, "criterion " + std::to_string(id), false, std::string("error: ") + e.what()};
    }
    throw InvalidInput("no acceptance criterion " + std::to_string(id));
}

bool run_selftest(const SelftestOptions& options, std::ostream& out) {
    bool all = true;
    for (int id = 1; id <= kCriterionCount; ++id) {
        const auto r = run_criterion(id, options);
        all = all && r.passed;
        out << (r.passed ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.name << ": " << r.detail << '\n';
    }
    out << (all ? "selftest: all checks passed" : "selftest: FAILED") << '\n';
    return all;
}

}  // namespace dvars
