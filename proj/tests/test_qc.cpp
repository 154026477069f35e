#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dvars/dvars.hpp"
#include "dvars/error.hpp"
#include "dvars/mask.hpp"
#include "dvars/pipeline.hpp"
#include "dvars/qc.hpp"
#include "dvars/report.hpp"
#include "dvars/simulate.hpp"
#include "dvars/tsv.hpp"

using namespace dvars;

namespace {

SimulationSpec null_spec(std::uint64_t seed) {
    SimulationSpec spec;
    spec.geometry.nx = 5000;
    spec.frames = 500;
    spec.mu = {500.0, 1500.0};
    spec.sigma = {5.0, 20.0};
    spec.rho = {0.0, 0.5};
    spec.seed = seed;
    return spec;
}

std::vector<std::size_t> flagged_frames(const QcReport& r) {
    std::vector<std::size_t> out;
    for (const auto& f : r.frames) {
        if (f.flag) out.push_back(f.frame);
    }
    return out;
}

}  // namespace

TEST_CASE("absolute threshold") {
    CHECK(flag_outliers(std::vector{1.0, 1.0, 1.0}, flag_policy::Absolute{1.5}).flags ==
          std::vector<std::uint8_t>{0, 0, 0});
    CHECK(flag_outliers(std::vector{1.0, 1.0, 10.0}, flag_policy::Absolute{1.5}).flags ==
          std::vector<std::uint8_t>{0, 0, 1});
    CHECK(flag_outliers(std::vector{1.0, 9.0}, flag_policy::None{}).flags == std::vector<std::uint8_t>{0, 0});
}

TEST_CASE("robust z uses median and 1.4826 MAD") {
    // median 1.0, MAD 0.1 -> scale 0.14826; 1.8 sits at z = 5.396, 1.7 at z = 4.72.
    const std::vector<double> s{0.9, 1.0, 1.1, 1.0, 0.9, 1.1, 1.0, 1.8, 1.7};
    const auto r = flag_outliers(s, flag_policy::RobustZ{5.0});
    CHECK(r.flags == std::vector<std::uint8_t>{0, 0, 0, 0, 0, 0, 0, 1, 0});
    CHECK(r.warnings.empty());
    CHECK(std::holds_alternative<flag_policy::RobustZ>(r.applied));

    // Literal definition under a shift: same z-scores, same flags.
    std::vector<double> shifted(s);
    for (auto& x : shifted) x += 3.0;
    CHECK(flag_outliers(shifted, flag_policy::RobustZ{5.0}).flags == r.flags);
}

TEST_CASE("robust z falls back to abs=1.5 when MAD is zero") {
    const auto r = flag_outliers(std::vector{1.0, 1.0, 1.0, 1.4, 2.0}, flag_policy::RobustZ{5.0});
    CHECK(r.flags == std::vector<std::uint8_t>{0, 0, 0, 0, 1});
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("abs=1.5") != std::string::npos);
    CHECK(to_string(r.applied) == "abs=1.5");
}

TEST_CASE("flag policy parsing") {
    CHECK(to_string(parse_flag_policy("abs=2.5")) == "abs=2.5");
    CHECK(to_string(parse_flag_policy("zrobust=5")) == "zrobust=5");
    CHECK(to_string(parse_flag_policy("none")) == "none");
    CHECK_THROWS_AS(parse_flag_policy("zrobust=-1"), InvalidInput);
    CHECK_THROWS_AS(parse_flag_policy("abs="), InvalidInput);
    CHECK_THROWS_AS(parse_flag_policy("sigma=3"), InvalidInput);
}

TEST_CASE("one k = 2 spike is caught with no false positives across 10 seeds") {
    for (std::uint64_t seed = 300; seed < 310; ++seed) {
        auto spec = null_spec(seed);
        spec.artifacts.emplace_back(artifact::Spike{250, 2.0});
        const auto sim = simulate_ar1_volume(spec);
        const auto mask = derive_mask(sim.volume, mask_strategy::MeanFraction{0.1});
        const auto report = run_qc(sim.volume, mask, ComputeOptions{});
        CAPTURE(seed);
        CHECK(flagged_frames(report) == std::vector<std::size_t>{250, 251});
        CHECK(report.summary.flagged_frames == 2);
    }
}

TEST_CASE("flags do not change when the data are rescaled") {
    auto spec = null_spec(400);
    spec.geometry.nx = 1000;
    spec.frames = 120;
    spec.artifacts.emplace_back(artifact::Spike{60, 1.5});
    const auto sim = simulate_ar1_volume(spec);
    std::vector<double> scaled(sim.volume.values().begin(), sim.volume.values().end());
    for (auto& x : scaled) x *= 0.003;
    const TimeSeriesVolume small(sim.volume.geometry(), sim.volume.frame_count(), std::move(scaled));
    const Mask all = Mask::all(sim.volume.geometry());
    for (const FlagPolicy& policy : {FlagPolicy{flag_policy::RobustZ{5.0}}, FlagPolicy{flag_policy::Absolute{1.2}}}) {
        ComputeOptions o;
        o.policy = policy;
        CHECK(flagged_frames(run_qc(sim.volume, all, o)) == flagged_frames(run_qc(small, all, o)));
    }
}

TEST_CASE("run_qc report structure") {
    auto spec = null_spec(500);
    spec.geometry.nx = 300;
    spec.frames = 40;
    const auto sim = simulate_ar1_volume(spec);
    ComputeOptions o;
    o.input_label = "sim";
    o.mask_label = "all";
    const auto r = run_qc(sim.volume, Mask::all(sim.volume.geometry()), o);
    REQUIRE(r.frames.size() == 39);
    CHECK(r.frames.front().frame == 2);
    CHECK(r.frames.back().frame == 40);
    for (const auto& f : r.frames) {
        CHECK(f.dvars);
        CHECK(f.dvars_star);
        CHECK(f.dvars_star_star);
    }
    CHECK(r.meta.voxels == 300);
    CHECK(r.meta.effective_voxels == 300);
    CHECK(r.meta.frames == 40);
    CHECK(r.meta.params_source == "estimated");
    CHECK(r.meta.version == kToolVersion);
    CHECK(r.summary.dvars_star->mean > 0.9);
    CHECK(r.summary.dvars_star->median > 0.9);
    CHECK_FALSE(r.meta.assumptions.empty());

    // Supplied truth replaces estimation.
    o.supplied_params = sim.truth();
    const auto t = run_qc(sim.volume, Mask::all(sim.volume.geometry()), o);
    CHECK(t.meta.params_source == "supplied");
    CHECK(t.frames[0].dvars_star != r.frames[0].dvars_star);
}

TEST_CASE("run_qc degrades to raw DVARS when parameters cannot be estimated") {
    const auto v = parse_tsv_matrix("1\t3\t2\n2\t2\t4\n");
    ComputeOptions o;
    o.estimation.detrend = true;
    const auto r = run_qc(v, Mask::all(v.geometry()), o);
    REQUIRE(r.frames.size() == 2);
    CHECK(*r.frames[0].dvars == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(!r.frames[0].dvars_star);
    CHECK(!r.frames[0].dvars_star_star);
    CHECK(r.summary.flagged_frames == 0);
    REQUIRE(r.meta.warnings.size() >= 1);
    CHECK(r.meta.warnings[0].find("standardized variants skipped") != std::string::npos);
    CHECK(report_to_tsv(r) ==
          "frame\tdvars\tdvars_star\tdvars_star_star\tflag\n"
          "2\t1.41421\tNA\tNA\t0\n"
          "3\t1.58114\tNA\tNA\t0\n");
}

TEST_CASE("run_qc keeps constant voxels in raw DVARS only") {
    const auto v = parse_tsv_matrix("1\t3\t2\t4\t1\n7\t7\t7\t7\t7\n2\t2\t4\t1\t3\n");
    ComputeOptions o;
    o.policy = flag_policy::None{};
    const auto r = run_qc(v, Mask::all(v.geometry()), o);
    CHECK(r.meta.voxels == 3);
    CHECK(r.meta.effective_voxels == 2);
    CHECK(r.summary.excluded_degenerate == 1);
    CHECK(r.frames[0].dvars_star);
}

TEST_CASE("variant selection") {
    const auto sel = parse_variants("raw,starstar");
    CHECK(sel.raw);
    CHECK(!sel.star);
    CHECK(sel.star_star);
    CHECK_THROWS_AS(parse_variants("raw,fancy"), InvalidInput);
    CHECK_THROWS_AS(parse_variants(""), InvalidInput);

    const auto v = parse_tsv_matrix("1\t3\t2\t4\n2\t2\t4\t1\n0\t1\t0\t2\n");
    ComputeOptions o;
    o.variants = sel;
    const auto r = run_qc(v, Mask::all(v.geometry()), o);
    CHECK(r.frames[0].dvars);
    CHECK(!r.frames[0].dvars_star);
    CHECK(r.frames[0].dvars_star_star);
}
