#include <cmath>
#include <vector>

#include "doctest.h"
#include "dvars/core_stats.hpp"
#include "dvars/error.hpp"
#include "dvars/simulate.hpp"
#include "test_util.hpp"

using namespace dvars;
using dvars::testing::rel_diff;

namespace {

SimulationSpec single_trace(double sigma, double rho, std::size_t frames, std::uint64_t seed) {
    SimulationSpec spec;
    spec.frames = frames;
    spec.mu = Range::constant(0.0);
    spec.sigma = Range::constant(sigma);
    spec.rho = Range::constant(rho);
    spec.seed = seed;
    return spec;
}

std::vector<double> values_of(const TimeSeriesVolume& v) { return {v.values().begin(), v.values().end()}; }

}  // namespace

TEST_CASE("white noise has no lag-1 correlation") {
    const auto sim = simulate_ar1_volume(single_trace(1.0, 0.0, 100000, 1));
    CHECK(std::abs(ar1_coeff(Series(sim.volume.trace(0)))) <= 0.01);
}

TEST_CASE("stationary variance and correlation match the parameters") {
    const auto sim = simulate_ar1_volume(single_trace(3.0, 0.6, 100000, 2));
    const Series y(sim.volume.trace(0));
    const double sd = sample_sd(y);
    CHECK(rel_diff(sd * sd, 9.0) < 0.05);
    CHECK(rel_diff(ar1_coeff(y), 0.6) < 0.05);
}

TEST_CASE("the first frame already has the stationary variance") {
    // Across many independent voxels, frame 1 must not be narrower than later frames.
    SimulationSpec spec = single_trace(2.0, 0.9, 3, 3);
    spec.geometry.nx = 40000;
    const auto sim = simulate_ar1_volume(spec);
    std::vector<double> first(sim.volume.voxel_count());
    for (std::size_t i = 0; i < first.size(); ++i) first[i] = sim.volume.at(i, 0);
    const double sd = sample_sd(Series(first));
    CHECK(rel_diff(sd * sd, 4.0) < 0.05);
}

TEST_CASE("parameter draws respect their ranges") {
    SimulationSpec spec;
    spec.geometry.nx = 2000;
    spec.frames = 2;
    spec.mu = {500.0, 1500.0};
    spec.sigma = {5.0, 20.0};
    spec.rho = {0.0, 0.5};
    spec.seed = 4;
    const auto sim = simulate_ar1_volume(spec);
    for (std::size_t i = 0; i < 2000; ++i) {
        CHECK(sim.mu[i] >= 500.0);
        CHECK(sim.mu[i] < 1500.0);
        CHECK(sim.sigma[i] >= 5.0);
        CHECK(sim.sigma[i] < 20.0);
        CHECK(sim.rho[i] >= 0.0);
        CHECK(sim.rho[i] < 0.5);
    }
    const auto truth = sim.truth();
    CHECK(truth.size() == 2000);
    CHECK(truth.meta().supplied);
}

TEST_CASE("same spec and seed give bit-identical volumes; different seeds differ") {
    SimulationSpec spec = single_trace(1.0, 0.2, 50, 5);
    spec.geometry.nx = 300;
    spec.artifacts.emplace_back(artifact::Spike{10, 2.0});
    spec.artifacts.emplace_back(artifact::Drift{0.5});
    const auto a = simulate_ar1_volume(spec, 1);
    const auto b = simulate_ar1_volume(spec, 4);
    CHECK(values_of(a.volume) == values_of(b.volume));
    spec.seed = 6;
    CHECK(values_of(simulate_ar1_volume(spec).volume) != values_of(a.volume));
}

TEST_CASE("substream seeds are distinct and order independent") {
    CHECK(rng::substream_seed(1, 0, 0) != rng::substream_seed(1, 0, 1));
    CHECK(rng::substream_seed(1, 0, 0) != rng::substream_seed(1, 1, 0));
    CHECK(rng::substream_seed(1, 0, 5) == rng::substream_seed(1, 0, 5));
    // A voxel's trace does not depend on how many voxels were generated.
    SimulationSpec small = single_trace(1.0, 0.3, 20, 7);
    small.geometry.nx = 3;
    SimulationSpec large = small;
    large.geometry.nx = 500;
    const auto a = simulate_ar1_volume(small);
    const auto b = simulate_ar1_volume(large);
    for (std::size_t t = 0; t < 20; ++t) CHECK(a.volume.at(2, t) == b.volume.at(2, t));
}

TEST_CASE("inject_spike") {
    SimulationSpec spec = single_trace(1.0, 0.0, 10, 8);
    spec.geometry.nx = 50;
    const auto sim = simulate_ar1_volume(spec);

    CHECK(values_of(inject_spike(sim.volume, sim.sigma, 3, 0.0, 1)) == values_of(sim.volume));

    const auto spiked = inject_spike(sim.volume, sim.sigma, 1, 3.0, 1);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(spiked.at(i, 0) != sim.volume.at(i, 0));
        for (std::size_t t = 1; t < 10; ++t) CHECK(spiked.at(i, t) == sim.volume.at(i, t));
    }

    std::vector<double> partial(50, 0.0);
    partial[7] = 1.0;
    const auto one = inject_spike(sim.volume, partial, 5, 1.0, 1);
    for (std::size_t i = 0; i < 50; ++i) CHECK((one.at(i, 4) != sim.volume.at(i, 4)) == (i == 7));

    CHECK_THROWS_AS(inject_spike(sim.volume, sim.sigma, 0, 1.0, 1), InvalidInput);
    CHECK_THROWS_AS(inject_spike(sim.volume, sim.sigma, 11, 1.0, 1), InvalidInput);
    CHECK_THROWS_AS(inject_spike(sim.volume, std::vector<double>(3, 1.0), 2, 1.0, 1), InvalidInput);
}

TEST_CASE("inject_drift") {
    SimulationSpec spec = single_trace(1.0, 0.5, 6, 9);
    spec.geometry.nx = 4;
    const auto sim = simulate_ar1_volume(spec);
    CHECK(values_of(inject_drift(sim.volume, 0.0)) == values_of(sim.volume));
    const auto drifted = inject_drift(sim.volume, 0.25);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t t = 1; t < 6; ++t) {
            const double shift = (drifted.at(i, t) - drifted.at(i, t - 1)) - (sim.volume.at(i, t) - sim.volume.at(i, t - 1));
            CHECK(shift == doctest::Approx(0.25).epsilon(1e-12));
        }
        CHECK(drifted.at(i, 0) - sim.volume.at(i, 0) == doctest::Approx(0.25));
    }
}

TEST_CASE("spec validation") {
    SimulationSpec ok = single_trace(1.0, 0.0, 10, 1);
    CHECK_NOTHROW(validate(ok));

    auto bad = ok;
    bad.rho = Range::constant(1.0);
    CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("rho"), InvalidInput);
    bad = ok;
    bad.rho = {-1.0, 0.2};
    CHECK_THROWS_AS(validate(bad), InvalidInput);
    bad = ok;
    bad.sigma = {0.0, 2.0};
    CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("sigma"), InvalidInput);
    bad = ok;
    bad.frames = 1;
    CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("frames"), InvalidInput);
    bad = ok;
    bad.mu = {3.0, 1.0};
    CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("mu"), InvalidInput);
    bad = ok;
    bad.artifacts.emplace_back(artifact::Spike{11, 1.0});
    CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("spike frame"), InvalidInput);
}

TEST_CASE("spec config parsing") {
    const auto spec = parse_simulation_spec(R"(# null run
nx = 10
ny = 5
nz = 2
frames = 300
tr = 2.5
voxel_size = 3 3 4
mu = 500 1500
sigma = 5 20
rho = 0.1     # constant
seed = 42
spike = 150 2
drift = 0.01
)");
    CHECK(spec.geometry.voxel_count() == 100);
    CHECK(spec.frames == 300);
    CHECK(*spec.geometry.repetition_time_s == 2.5);
    CHECK(spec.mu.lo == 500.0);
    CHECK(spec.mu.hi == 1500.0);
    CHECK(spec.rho.is_constant());
    CHECK(spec.seed == 42);
    REQUIRE(spec.artifacts.size() == 2);
    CHECK(std::get<artifact::Spike>(spec.artifacts[0]).frame == 150);
    CHECK(std::get<artifact::Drift>(spec.artifacts[1]).slope == 0.01);

    CHECK_THROWS_WITH_AS(parse_simulation_spec("rho = 1.0\n"), doctest::Contains("rho"), InvalidInput);
    CHECK_THROWS_WITH_AS(parse_simulation_spec("colour = red\n"), doctest::Contains("unknown key"), InvalidInput);
    CHECK_THROWS_WITH_AS(parse_simulation_spec("frames = many\n"), doctest::Contains("frames"), InvalidInput);
    CHECK_THROWS_AS(parse_simulation_spec("sigma\n"), InvalidInput);
}
