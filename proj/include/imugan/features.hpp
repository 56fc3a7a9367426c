#pragma once

// Nine summary statistics per channel, concatenated channel-major into a
// 45-value feature vector. All moments are population moments (divide by L).

#include "imugan/trip.hpp"

#include <span>
#include <string>
#include <vector>

namespace imugan {

inline constexpr int kStatsPerChannel = 9;
inline constexpr int kFeatureCount = kChannels * kStatsPerChannel;

/// Per-channel order inside the feature vector.
inline constexpr std::array<std::string_view, kStatsPerChannel> kStatNames = {
    "mean", "median", "mode", "std", "skewness", "kurtosis", "p25", "p75", "iqr"};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(std::span<const double> series);

/// Center of the most populated of 10 equal-width bins over [min, max]; ties go
/// to the lowest bin; a constant series returns its value.
double mode(std::span<const double> series);

/// Third standardized moment; 0 when the series is constant.
double skewness(std::span<const double> series);

/// Fourth standardized moment (not excess); 0 when the series is constant.
double kurtosis(std::span<const double> series);

/// Linear interpolation between order statistics at rank (p / 100) (L - 1).
double percentile(std::span<const double> series, double p);

double iqr(std::span<const double> series);

/// 45 features of a L x 5 trip.
Vector extract_features(const Matrix& trip);

/// Feature matrix with one row per trip.
Matrix extract_features(std::span<const Trip> trips);

/// "long_acc_mean", "long_acc_median", ... in feature-vector order.
std::vector<std::string> feature_names();

} // namespace imugan
