#include "imugan/features.hpp"

#include <algorithm>
#include <cmath>

namespace imugan {

namespace {

constexpr int kModeBins = 10;

void require_nonempty(std::span<const double> series, const char* what) {
    require(!series.empty(), std::string(what) + ": empty series");
}

double central_moment(std::span<const double> series, double mean, int order) {
    double acc = 0.0;
    for (double x : series) acc += std::pow(x - mean, order);
    return acc / static_cast<double>(series.size());
}

std::vector<double> sorted_copy(std::span<const double> series) {
    std::vector<double> v(series.begin(), series.end());
    std::sort(v.begin(), v.end());
    return v;
}

double percentile_sorted(const std::vector<double>& sorted, double p) {
    const double rank = (p / 100.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    const double frac = rank - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

} // namespace

MeanStd mean_std(std::span<const double> series) {
    require_nonempty(series, "mean_std");
    const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
    if (*lo == *hi) return MeanStd{*lo, 0.0};
    double sum = 0.0;
    for (double x : series) sum += x;
    const double mean = sum / static_cast<double>(series.size());
    return MeanStd{mean, std::sqrt(central_moment(series, mean, 2))};
}

double mode(std::span<const double> series) {
    require_nonempty(series, "mode");
    const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
    const double lo = *lo_it, hi = *hi_it;
    if (lo == hi) return lo;
    const double width = (hi - lo) / kModeBins;
    std::array<int, kModeBins> counts{};
    for (double x : series) {
        auto bin = static_cast<int>(std::floor((x - lo) / width));
        counts[static_cast<std::size_t>(std::clamp(bin, 0, kModeBins - 1))] += 1;
    }
    // max_element returns the first maximum, i.e. the lowest bin on ties.
    const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
    return lo + (static_cast<double>(best) + 0.5) * width;
}

double skewness(std::span<const double> series) {
    const MeanStd ms = mean_std(series);
    if (ms.std == 0.0) return 0.0;
    return central_moment(series, ms.mean, 3) / std::pow(ms.std, 3);
}

double kurtosis(std::span<const double> series) {
    const MeanStd ms = mean_std(series);
    if (ms.std == 0.0) return 0.0;
    return central_moment(series, ms.mean, 4) / std::pow(ms.std, 4);
}

double percentile(std::span<const double> series, double p) {
    require_nonempty(series, "percentile");
    require(p >= 0.0 && p <= 100.0, "percentile: p must lie in [0, 100], got " + std::to_string(p));
    return percentile_sorted(sorted_copy(series), p);
}

double iqr(std::span<const double> series) {
    require_nonempty(series, "iqr");
    const auto sorted = sorted_copy(series);
    return percentile_sorted(sorted, 75.0) - percentile_sorted(sorted, 25.0);
}

Vector extract_features(const Matrix& trip) {
    require(trip.cols() == kChannels && trip.rows() >= 1,
            "extract_features: trip must be L x 5, got " + std::to_string(trip.rows()) + " x " +
                std::to_string(trip.cols()));
    Vector out(kFeatureCount);
    for (Index c = 0; c < kChannels; ++c) {
        const Vector column = trip.col(c);
        const std::span<const double> s(column.data(), static_cast<std::size_t>(column.size()));
        const auto sorted = sorted_copy(s);
        const MeanStd ms = mean_std(s);
        const double p25 = percentile_sorted(sorted, 25.0);
        const double p75 = percentile_sorted(sorted, 75.0);
        const Index base = c * kStatsPerChannel;
        out[base + 0] = ms.mean;
        out[base + 1] = percentile_sorted(sorted, 50.0);
        out[base + 2] = mode(s);
        out[base + 3] = ms.std;
        out[base + 4] = skewness(s);
        out[base + 5] = kurtosis(s);
        out[base + 6] = p25;
        out[base + 7] = p75;
        out[base + 8] = p75 - p25;
    }
    return out;
}

Matrix extract_features(std::span<const Trip> trips) {
    Matrix out(static_cast<Index>(trips.size()), kFeatureCount);
    for (std::size_t i = 0; i < trips.size(); ++i) out.row(static_cast<Index>(i)) = extract_features(trips[i].values);
    return out;
}

std::vector<std::string> feature_names() {
    std::vector<std::string> names;
    names.reserve(kFeatureCount);
    for (auto channel : kChannelNames)
        for (auto stat : kStatNames) names.push_back(std::string(channel) + "_" + std::string(stat));
    return names;
}

} // namespace imugan
