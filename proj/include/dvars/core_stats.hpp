#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace dvars {

/// An ordered run of finite samples, typically one voxel's trace.
class Series {
public:
    /// Throws InvalidInput if any value is NaN or infinite.
    explicit Series(std::vector<double> values);
    explicit Series(std::span<const double> values);
    Series(std::initializer_list<double> values);

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }

private:
    std::vector<double> values_;
};

/**
 * Empirical quantile with linear interpolation between order statistics at
 * rank h = (n - 1) * p. Throws InvalidInput for an empty series or p outside
 * [0, 1].
 */
[[nodiscard]] double quantile(const Series& s, double p);

[[nodiscard]] double median(const Series& s);

/// Interquartile range divided by 1.349, the normal-consistent scale. Needs n >= 2.
[[nodiscard]] double robust_sd_iqr(const Series& s);

/// Square root of the unbiased (n - 1) sample variance. Needs n >= 2.
[[nodiscard]] double sample_sd(const Series& s);

/// Median absolute deviation from the median, unscaled.
[[nodiscard]] double median_abs_deviation(const Series& s);

/**
 * Lag-1 autocorrelation
 *
 *   sum_{t=2..n} (y_t - m)(y_{t-1} - m) / sum_{t=1..n} (y_t - m)^2
 *
 * Needs n >= 3. A constant series raises DegenerateInput. The result is
 * always within [-1, 1].
 */
[[nodiscard]] double ar1_coeff(const Series& s);

/// Residuals of an OLS fit on (1, t). Needs n >= 2.
[[nodiscard]] Series detrend_linear(const Series& s);

/// Variance of a first difference of a stationary AR(1) trace: 2 (1 - rho) sigma^2.
[[nodiscard]] double diff_variance_predicted(double sigma, double rho);

/// Pairwise summation in a fixed tree; the result depends only on the
/// values and their order.
[[nodiscard]] double pairwise_sum(std::span<const double> values) noexcept;

}  // namespace dvars
