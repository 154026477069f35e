#include "dvars/mask.hpp"

#include <charconv>
#include <cstdio>

#include "dvars/core_stats.hpp"
#include "dvars/error.hpp"

namespace dvars {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double temporal_mean(std::span<const double> trace) {
    return pairwise_sum(trace) / static_cast<double>(trace.size());
}

bool is_constant(std::span<const double> trace) {
    for (double v : trace) {
        if (v != trace.front()) return false;
    }
    return true;
}

}  // namespace

MaskStrategy parse_mask_strategy(std::string_view text) {
    if (text == "all") return mask_strategy::All{};
    if (text == "nonzero-mean") return mask_strategy::NonzeroMean{};
    if (text == "nonconstant") return mask_strategy::Nonconstant{};
    constexpr std::string_view kPrefix = "mean-frac=";
    if (text.substr(0, kPrefix.size()) == kPrefix) {
        const auto arg = text.substr(kPrefix.size());
        double f = 0.0;
        const auto [ptr, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), f);
        if (ec != std::errc{} || ptr != arg.data() + arg.size() || !(f > 0.0 && f < 1.0)) {
            throw InvalidInput("mean-frac needs a fraction strictly between 0 and 1, got \"" +
                               std::string(arg) + "\"");
        }
        return mask_strategy::MeanFraction{f};
    }
    throw InvalidInput("unknown mask strategy \"" + std::string(text) +
                       "\" (expected all, nonzero-mean, mean-frac=F or nonconstant)");
}

std::string to_string(const MaskStrategy& s) {
    return std::visit(Overloaded{
                          [](mask_strategy::All) { return std::string("all"); },
                          [](mask_strategy::NonzeroMean) { return std::string("nonzero-mean"); },
                          [](mask_strategy::Nonconstant) { return std::string("nonconstant"); },
                          [](mask_strategy::MeanFraction m) {
                              char buf[64];
                              std::snprintf(buf, sizeof buf, "mean-frac=%g", m.fraction);
                              return std::string(buf);
                          },
                      },
                      s);
}

Mask derive_mask(const TimeSeriesVolume& v, const MaskStrategy& strategy) {
    const std::size_t n = v.voxel_count();
    std::vector<std::uint8_t> inc(n, 0);

    std::visit(Overloaded{
                   [&](mask_strategy::All) { std::fill(inc.begin(), inc.end(), 1); },
                   [&](mask_strategy::NonzeroMean) {
                       for (std::size_t i = 0; i < n; ++i) inc[i] = temporal_mean(v.trace(i)) != 0.0;
                   },
                   [&](mask_strategy::Nonconstant) {
                       for (std::size_t i = 0; i < n; ++i) inc[i] = !is_constant(v.trace(i));
                   },
                   [&](mask_strategy::MeanFraction m) {
                       std::vector<double> means(n);
                       std::vector<double> positive;
                       for (std::size_t i = 0; i < n; ++i) {
                           means[i] = temporal_mean(v.trace(i));
                           if (means[i] > 0.0) positive.push_back(means[i]);
                       }
                       if (positive.empty()) return;
                       const double grand =
                           pairwise_sum(positive) / static_cast<double>(positive.size());
                       const double cutoff = m.fraction * grand;
                       for (std::size_t i = 0; i < n; ++i) inc[i] = means[i] > 0.0 && means[i] >= cutoff;
                   },
               },
               strategy);

    Mask mask(v.geometry(), std::move(inc));
    if (mask.count() == 0) {
        throw InvalidInput("mask strategy " + to_string(strategy) +
                           " selected no voxels; try a looser strategy such as --mask-strategy all");
    }
    return mask;
}

}  // namespace dvars
