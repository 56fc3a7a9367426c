#pragma once

#include "imugan/numerics.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace imugan {

enum class DrivingStyle : int { normal = 0, aggressive = 1 };

inline constexpr int kChannels = 5;
inline constexpr int kTripSeconds = 60;
inline constexpr int kRawRateHz = 1000;

inline constexpr std::array<std::string_view, kChannels> kChannelNames = {"long_acc", "lat_acc", "pitch", "yaw",
                                                                           "roll"};

std::string_view to_string(DrivingStyle style);
/// Accepts "normal" / "aggressive"; "unlabeled" (or empty) yields nullopt.
std::optional<DrivingStyle> style_from_string(std::string_view name);
std::string_view label_string(const std::optional<DrivingStyle>& label);

/// One-minute trip at 1 Hz: rows are time steps, columns the five channels.
struct Trip {
    std::string id;
    Matrix values;
    std::optional<DrivingStyle> label;
};

/// Raw trip at 1000 Hz: rows are samples, columns the five channels.
struct RawTrip {
    std::string id;
    Matrix samples;
    std::optional<DrivingStyle> label;
};

} // namespace imugan
