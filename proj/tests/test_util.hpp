#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace dvars::testing {

inline double rel_diff(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

/// Property-test inputs: random length and values with a spread of scales.
class Generator {
public:
    explicit Generator(std::uint64_t seed) : engine_(seed) {}

    std::vector<double> series(std::size_t min_len, std::size_t max_len) {
        std::uniform_int_distribution<std::size_t> len(min_len, max_len);
        std::uniform_real_distribution<double> scale_exp(-3.0, 3.0);
        std::normal_distribution<double> value(0.0, 1.0);
        const double scale = std::pow(10.0, scale_exp(engine_));
        std::vector<double> out(len(engine_));
        for (auto& v : out) v = scale * value(engine_);
        return out;
    }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

private:
    std::mt19937_64 engine_;
};

}  // namespace dvars::testing
