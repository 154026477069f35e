#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "dvars/core_stats.hpp"
#include "dvars/error.hpp"
#include "dvars/simulate.hpp"
#include "test_util.hpp"

using namespace dvars;
using dvars::testing::Generator;
using dvars::testing::rel_diff;

namespace {

// Least squares on (1, t) by the uncentered normal equations, in long double.
std::vector<double> ols_residuals_oracle(const std::vector<double>& y) {
    long double n = y.size(), st = 0, stt = 0, sy = 0, sty = 0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        st += t;
        stt += static_cast<long double>(t) * t;
        sy += y[t];
        sty += t * static_cast<long double>(y[t]);
    }
    const long double det = n * stt - st * st;
    const long double b = (n * sty - st * sy) / det;
    const long double a = (sy - b * st) / n;
    std::vector<double> r(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) r[t] = static_cast<double>(y[t] - a - b * t);
    return r;
}

Series simulated_trace(double sigma, double rho, std::size_t n, std::uint64_t seed) {
    SimulationSpec spec;
    spec.frames = n;
    spec.mu = Range::constant(0.0);
    spec.sigma = Range::constant(sigma);
    spec.rho = Range::constant(rho);
    spec.seed = seed;
    const auto sim = simulate_ar1_volume(spec, 1);
    return Series(sim.volume.trace(0));
}

}  // namespace

TEST_CASE("series rejects non-finite values") {
    CHECK_THROWS_AS(Series({1.0, std::numeric_limits<double>::quiet_NaN()}), InvalidInput);
    CHECK_THROWS_AS(Series({std::numeric_limits<double>::infinity()}), InvalidInput);
}

TEST_CASE("quantile") {
    CHECK(quantile(Series{0, 1, 2, 3}, 0.25) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(quantile(Series{5}, 0.5) == 5.0);
    CHECK(quantile(Series{1, 2, 3}, 1.0) == 3.0);
    CHECK(quantile(Series{3, 1, 2}, 0.0) == 1.0);
    CHECK(median(Series{4, 1, 3, 2}) == 2.5);

    CHECK_THROWS_AS(quantile(Series(std::vector<double>{}), 0.5), InvalidInput);
    CHECK_THROWS_AS(quantile(Series{1, 2}, -0.1), InvalidInput);
    CHECK_THROWS_AS(quantile(Series{1, 2}, 1.1), InvalidInput);
    CHECK_THROWS_AS(quantile(Series{1, 2}, std::numeric_limits<double>::quiet_NaN()), InvalidInput);
}

TEST_CASE("quantile is monotone in p and affine equivariant") {
    Generator gen(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Series s(gen.series(1, 60));
        double prev = -std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 20; ++k) {
            const double q = quantile(s, k / 20.0);
            CHECK(q >= prev);
            prev = q;
        }
        const double a = gen.uniform(0.0, 5.0);
        const double b = gen.uniform(-10.0, 10.0);
        std::vector<double> mapped(s.values().begin(), s.values().end());
        for (auto& v : mapped) v = a * v + b;
        const double p = gen.uniform(0.0, 1.0);
        const double lhs = quantile(Series(mapped), p);
        const double rhs = a * quantile(s, p) + b;
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(rhs) + std::abs(b) + a * 1e3 + 1.0));
    }
}

TEST_CASE("robust_sd_iqr") {
    // Quartiles at the standard-normal values +-0.6745 give 1.349 / 1.349.
    CHECK(robust_sd_iqr(Series{-1.5, -0.6745, 0.0, 0.6745, 1.5}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(robust_sd_iqr(Series{0, 1, 2, 3}) == doctest::Approx(1.5 / 1.349).epsilon(1e-14));
    CHECK(robust_sd_iqr(Series{1.25, 1.25, 1.25, 1.25}) == 0.0);
    CHECK_THROWS_AS(robust_sd_iqr(Series{1.0}), InvalidInput);
}

TEST_CASE("robust_sd_iqr is scale equivariant and shift invariant") {
    Generator gen(12);
    for (int trial = 0; trial < 200; ++trial) {
        const Series s(gen.series(2, 80));
        const double a = gen.uniform(-100.0, 100.0);
        const double b = gen.uniform(-1e3, 1e3);
        std::vector<double> mapped(s.values().begin(), s.values().end());
        for (auto& v : mapped) v = a * v + b;
        const double base = robust_sd_iqr(s);
        const double got = robust_sd_iqr(Series(mapped));
        CHECK(std::abs(got - std::abs(a) * base) <= 1e-9 * (std::abs(b) + std::abs(a) * base + 1.0));
    }
}

TEST_CASE("sample_sd") {
    CHECK(sample_sd(Series{1, 1, 1}) == 0.0);
    CHECK(sample_sd(Series{0, 2}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(sample_sd(Series{1, 2, 3, 4}) == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
    CHECK_THROWS_AS(sample_sd(Series{3.0}), InvalidInput);
}

TEST_CASE("ar1_coeff") {
    // Alternating +-1, n = 8: seven cross products of -1 over a sum of squares of 8.
    const double alt = ar1_coeff(Series{1, -1, 1, -1, 1, -1, 1, -1});
    CHECK(alt == doctest::Approx(-0.875).epsilon(1e-15));
    CHECK(alt >= -1.0);
    CHECK(alt <= -0.7);

    CHECK_THROWS_AS(ar1_coeff(Series{2, 2, 2, 2}), DegenerateInput);
    CHECK_THROWS_AS(ar1_coeff(Series{0.1, 0.1, 0.1}), DegenerateInput);
    CHECK_THROWS_AS(ar1_coeff(Series{1, 2}), InvalidInput);

    SUBCASE("white noise") {
        CHECK(std::abs(ar1_coeff(simulated_trace(1.0, 0.0, 10000, 5))) < 0.05);
    }
    SUBCASE("AR(1) with rho = 0.4") {
        const double r = ar1_coeff(simulated_trace(1.0, 0.4, 10000, 6));
        CHECK(r >= 0.35);
        CHECK(r <= 0.45);
    }
}

TEST_CASE("ar1_coeff is bounded and invariant to nonzero affine maps") {
    Generator gen(13);
    for (int trial = 0; trial < 300; ++trial) {
        auto v = gen.series(3, 50);
        if (trial % 3 == 0) {
            // Strongly trending input pushes the estimate toward +1.
            for (std::size_t t = 0; t < v.size(); ++t) v[t] += 100.0 * t * std::abs(v[0] + 1.0);
        }
        const Series s(v);
        const double r = ar1_coeff(s);
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
        double a = gen.uniform(-50.0, 50.0);
        if (std::abs(a) < 1e-3) a = 1.0;
        const double b = gen.uniform(-100.0, 100.0);
        std::vector<double> mapped(v);
        for (auto& x : mapped) x = a * x + b;
        CHECK(std::abs(ar1_coeff(Series(mapped)) - r) < 1e-8);
    }
}

TEST_CASE("detrend_linear") {
    auto values = [](const Series& s) { return std::vector<double>(s.values().begin(), s.values().end()); };
    CHECK(values(detrend_linear(Series{1, 2, 3, 4})) == std::vector<double>{0, 0, 0, 0});
    CHECK(values(detrend_linear(Series{7, 7, 7})) == std::vector<double>{0, 0, 0});

    // Oracle value, frozen: residuals of {0,1,0,1} on (1, t).
    const std::vector<double> frozen{-0.2, 0.6, -0.6, 0.2};
    const auto oracle = ols_residuals_oracle({0, 1, 0, 1});
    const auto got = values(detrend_linear(Series{0, 1, 0, 1}));
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(oracle[t] == doctest::Approx(frozen[t]).epsilon(1e-15));
        CHECK(got[t] == doctest::Approx(frozen[t]).epsilon(1e-14));
    }
    CHECK_THROWS_AS(detrend_linear(Series{1.0}), InvalidInput);
}

TEST_CASE("detrend_linear matches the oracle, zeroes affine input, has zero mean and is idempotent") {
    Generator gen(14);
    for (int trial = 0; trial < 200; ++trial) {
        const auto v = gen.series(2, 100);
        const Series once = detrend_linear(Series(v));
        const Series twice = detrend_linear(once);
        const auto oracle = ols_residuals_oracle(v);
        double scale = 0.0;
        for (double x : v) scale = std::max(scale, std::abs(x));
        double mean = 0.0;
        for (std::size_t t = 0; t < v.size(); ++t) {
            CHECK(std::abs(once[t] - oracle[t]) <= 1e-10 * scale);
            CHECK(std::abs(twice[t] - once[t]) <= 1e-10 * scale);
            mean += once[t];
        }
        CHECK(std::abs(mean / v.size()) <= 1e-12 * scale);

        const double a = gen.uniform(-10, 10);
        const double b = gen.uniform(-10, 10);
        std::vector<double> line(v.size());
        for (std::size_t t = 0; t < v.size(); ++t) line[t] = a + b * t;
        const Series flat = detrend_linear(Series(line));
        for (double r : flat.values()) CHECK(std::abs(r) <= 1e-12 * (10 + 10 * v.size()));
    }
}

TEST_CASE("diff_variance_predicted") {
    CHECK(diff_variance_predicted(1.0, 0.0) == 2.0);
    CHECK(diff_variance_predicted(2.0, 0.5) == 4.0);
    CHECK(diff_variance_predicted(3.7, 1.0) == 0.0);
    CHECK(diff_variance_predicted(0.0, 0.3) == 0.0);
    CHECK_THROWS_AS(diff_variance_predicted(-1.0, 0.0), InvalidInput);
    CHECK_THROWS_AS(diff_variance_predicted(1.0, 1.5), InvalidInput);
    CHECK_THROWS_AS(diff_variance_predicted(1.0, -1.01), InvalidInput);
}

TEST_CASE("difference variance of a long AR(1) trace matches 2(1-rho)sigma^2") {
    std::uint64_t seed = 40;
    for (double sigma : {1.0, 10.0}) {
        for (double rho : {0.0, 0.3, 0.7}) {
            const Series y = simulated_trace(sigma, rho, 100000, seed++);
            std::vector<double> d(y.size() - 1);
            for (std::size_t t = 1; t < y.size(); ++t) d[t - 1] = y[t] - y[t - 1];
            const double sd = sample_sd(Series(d));
            CHECK(rel_diff(sd * sd, diff_variance_predicted(sigma, rho)) < 0.05);
        }
    }
}

TEST_CASE("IQR scale resists contamination that ruins the sample SD") {
    Series clean = simulated_trace(10.0, 0.0, 100000, 77);
    std::vector<double> v(clean.values().begin(), clean.values().end());
    for (std::size_t t = 0; t < v.size(); t += 20) v[t] = (t / 20) % 2 ? -100.0 : 100.0;
    const Series dirty(v);
    CHECK(std::abs(robust_sd_iqr(dirty) - 10.0) / 10.0 < 0.10);
    CHECK(std::abs(sample_sd(dirty) - 10.0) / 10.0 > 0.50);
}

TEST_CASE("pairwise_sum is exact on small integers") {
    std::vector<double> v(1000);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
    CHECK(pairwise_sum(v) == 499500.0);
    CHECK(pairwise_sum({}) == 0.0);
}
