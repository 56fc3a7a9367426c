#pragma once

// Parametric stand-in for simulator recordings: five IMU channels at 1000 Hz,
// each a mix of slow sinusoids, white noise and smooth manoeuvre bumps whose
// rate and size depend on the driving style.

#include "imugan/trip.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace imugan {

struct ChannelProfile {
    double amplitude = 0.0;       // total amplitude of the sinusoid mixture
    double freq_lo = 0.0;         // Hz
    double freq_hi = 0.0;         // Hz
    double noise_std = 0.0;
    double event_amplitude = 0.0; // peak of one manoeuvre bump
};

struct StyleProfile {
    DrivingStyle style = DrivingStyle::normal;
    std::array<ChannelProfile, kChannels> channels{};
    double event_rate = 0.0;        // events per minute
    double event_duration_ms = 0.0; // mean bump width
    /// Log-normal spread of a per-trip gain on event amplitudes (driver
    /// variability); 0 disables it.
    double gain_spread = 0.0;

    void validate() const;
};

StyleProfile default_profile(DrivingStyle style);

RawTrip simulate_trip(const StyleProfile& profile, Rng& rng, double duration_s = kTripSeconds,
                      int rate_hz = kRawRateHz);

struct SimulatedDataset {
    std::vector<RawTrip> trips;       // labels only on the first `labeled` trips
    std::vector<DrivingStyle> truth;  // hidden ground truth for every trip
    std::size_t labeled = 0;
};

struct SimulationSettings {
    int n = 238;
    int labeled = 60;
    std::uint64_t seed = 0;
    StyleProfile normal = default_profile(DrivingStyle::normal);
    StyleProfile aggressive = default_profile(DrivingStyle::aggressive);

    void validate() const;
};

/// Trip i has style i % 2 (normal first) and is generated from its own derived
/// seed; the first `labeled` trips keep their label, the rest are emitted
/// unlabeled.
SimulatedDataset simulate_dataset(const SimulationSettings& settings);

/// Streaming form of simulate_dataset: `sink(trip, truth)` is called in trip order.
void simulate_each(const SimulationSettings& settings, const std::function<void(RawTrip&&, DrivingStyle)>& sink);

} // namespace imugan
