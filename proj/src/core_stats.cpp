#include "dvars/core_stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dvars/error.hpp"

namespace dvars {

namespace {

constexpr double kIqrToSigma = 1.349;

void require_size(const Series& s, std::size_t n, const char* op) {
    if (s.size() < n) {
        throw InvalidInput(std::string(op) + ": need at least " + std::to_string(n) +
                           " samples, got " + std::to_string(s.size()));
    }
}

double mean_of(std::span<const double> v) {
    return pairwise_sum(v) / static_cast<double>(v.size());
}

double quantile_sorted(std::span<const double> sorted, double p) {
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) {
        return sorted.back();
    }
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<double> sorted_copy(const Series& s) {
    std::vector<double> v(s.values().begin(), s.values().end());
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

Series::Series(std::vector<double> values) : values_(std::move(values)) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw InvalidInput("series value at index " + std::to_string(i) + " is not finite");
        }
    }
}

Series::Series(std::span<const double> values)
    : Series(std::vector<double>(values.begin(), values.end())) {}

Series::Series(std::initializer_list<double> values) : Series(std::vector<double>(values)) {}

double pairwise_sum(std::span<const double> values) noexcept {
    constexpr std::size_t kLeaf = 32;
    if (values.size() <= kLeaf) {
        double acc = 0.0;
        for (double v : values) acc += v;
        return acc;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double quantile(const Series& s, double p) {
    if (s.empty()) throw InvalidInput("quantile: empty series");
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidInput("quantile: probability " + std::to_string(p) + " outside [0, 1]");
    }
    return quantile_sorted(sorted_copy(s), p);
}

double median(const Series& s) { return quantile(s, 0.5); }

double robust_sd_iqr(const Series& s) {
    require_size(s, 2, "robust_sd_iqr");
    const auto sorted = sorted_copy(s);
    const double q1 = quantile_sorted(sorted, 0.25);
    const double q3 = quantile_sorted(sorted, 0.75);
    return (q3 - q1) / kIqrToSigma;
}

double sample_sd(const Series& s) {
    require_size(s, 2, "sample_sd");
    const double m = mean_of(s.values());
    std::vector<double> sq(s.size());
    std::transform(s.values().begin(), s.values().end(), sq.begin(),
                   [m](double y) { return (y - m) * (y - m); });
    return std::sqrt(pairwise_sum(sq) / static_cast<double>(s.size() - 1));
}

double median_abs_deviation(const Series& s) {
    const double med = median(s);
    std::vector<double> dev(s.size());
    std::transform(s.values().begin(), s.values().end(), dev.begin(),
                   [med](double y) { return std::abs(y - med); });
    return median(Series(std::move(dev)));
}

double ar1_coeff(const Series& s) {
    require_size(s, 3, "ar1_coeff");
    const auto v = s.values();
    if (std::all_of(v.begin(), v.end(), [&](double y) { return y == v.front(); })) {
        throw DegenerateInput("ar1_coeff: constant series, lag-1 correlation undefined");
    }
    const double m = mean_of(v);
    std::vector<double> centered(v.size());
    std::transform(v.begin(), v.end(), centered.begin(), [m](double y) { return y - m; });

    std::vector<double> cross(v.size() - 1);
    std::vector<double> sq(v.size());
    for (std::size_t t = 0; t < v.size(); ++t) {
        sq[t] = centered[t] * centered[t];
        if (t > 0) cross[t - 1] = centered[t] * centered[t - 1];
    }
    const double den = pairwise_sum(sq);
    if (!(den > 0.0)) {
        throw DegenerateInput("ar1_coeff: zero variance, lag-1 correlation undefined");
    }
    return std::clamp(pairwise_sum(cross) / den, -1.0, 1.0);
}

Series detrend_linear(const Series& s) {
    require_size(s, 2, "detrend_linear");
    const auto v = s.values();
    const auto n = v.size();
    // Centered time index keeps the normal equations diagonal.
    const double t_mean = static_cast<double>(n - 1) / 2.0;
    const double y_mean = mean_of(v);
    std::vector<double> sxy(n);
    std::vector<double> sxx(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double tc = static_cast<double>(t) - t_mean;
        sxy[t] = tc * (v[t] - y_mean);
        sxx[t] = tc * tc;
    }
    const double slope = pairwise_sum(sxy) / pairwise_sum(sxx);
    std::vector<double> resid(n);
    for (std::size_t t = 0; t < n; ++t) {
        const double tc = static_cast<double>(t) - t_mean;
        resid[t] = (v[t] - y_mean) - slope * tc;
    }
    return Series(std::move(resid));
}

double diff_variance_predicted(double sigma, double rho) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw InvalidInput("diff_variance_predicted: sigma must be finite and >= 0");
    }
    if (!(rho >= -1.0 && rho <= 1.0)) {
        throw InvalidInput("diff_variance_predicted: rho must lie in [-1, 1]");
    }
    return 2.0 * (1.0 - rho) * sigma * sigma;
}

}  // namespace dvars
