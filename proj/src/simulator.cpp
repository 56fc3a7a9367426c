#include "imugan/simulator.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace imugan {

void StyleProfile::validate() const {
    for (const ChannelProfile& c : channels) {
        require(c.amplitude >= 0 && c.freq_lo >= 0 && c.freq_hi >= c.freq_lo && c.noise_std >= 0 &&
                    c.event_amplitude >= 0,
                "style profile: channel parameters must be nonnegative with freq_lo <= freq_hi");
    }
    require(event_rate >= 0 && event_duration_ms >= 0 && gain_spread >= 0,
            "style profile: event parameters must be nonnegative");
}

StyleProfile default_profile(DrivingStyle style) {
    StyleProfile p;
    p.style = style;
    p.event_duration_ms = 6000.0;
    p.gain_spread = 0.25;
    //               amplitude  band (Hz)      noise   event
    if (style == DrivingStyle::normal) {
        p.event_rate = 4.0;
        p.channels = {{{0.60, 0.005, 0.05, 0.30, 1.20},
                       {0.50, 0.005, 0.05, 0.30, 1.00},
                       {0.020, 0.005, 0.05, 0.010, 0.030},
                       {0.060, 0.005, 0.05, 0.020, 0.080},
                       {0.015, 0.005, 0.05, 0.005, 0.020}}};
    } else {
        p.event_rate = 7.0;
        p.channels = {{{0.70, 0.005, 0.05, 0.40, 2.00},
                       {0.60, 0.005, 0.05, 0.40, 1.80},
                       {0.025, 0.005, 0.05, 0.014, 0.050},
                       {0.070, 0.005, 0.05, 0.028, 0.140},
                       {0.018, 0.005, 0.05, 0.007, 0.035}}};
    }
    return p;
}

RawTrip simulate_trip(const StyleProfile& profile, Rng& rng, double duration_s, int rate_hz) {
    require(duration_s > 0 && rate_hz > 0, "simulate_trip: duration and rate must be positive");
    profile.validate();
    const auto samples = static_cast<Index>(std::llround(duration_s * rate_hz));
    const double dt = 1.0 / rate_hz;
    constexpr double two_pi = 2.0 * std::numbers::pi;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    RawTrip trip;
    trip.label = profile.style;
    trip.samples = Matrix::Zero(samples, kChannels);

    // Slow drift: three random-phase sinusoids per channel, plus white noise.
    for (int c = 0; c < kChannels; ++c) {
        const ChannelProfile& ch = profile.channels[static_cast<std::size_t>(c)];
        std::array<double, 3> amp{}, freq{}, phase{};
        for (int k = 0; k < 3; ++k) {
            amp[k] = ch.amplitude / 3.0 * (0.5 + unit(rng));
            freq[k] = ch.freq_lo + (ch.freq_hi - ch.freq_lo) * unit(rng);
            phase[k] = two_pi * unit(rng);
        }
        for (Index t = 0; t < samples; ++t) {
            const double time = static_cast<double>(t) * dt;
            double v = 0.0;
            for (int k = 0; k < 3; ++k) v += amp[k] * std::sin(two_pi * freq[k] * time + phase[k]);
            trip.samples(t, c) = v + ch.noise_std * normal(rng);
        }
    }

    // Manoeuvres: Poisson arrivals, each a raised-cosine bump on every channel.
    const double gain = profile.gain_spread > 0 ? std::exp(profile.gain_spread * normal(rng)) : 1.0;
    std::poisson_distribution<int> arrivals(profile.event_rate * duration_s / 60.0);
    const int events = profile.event_rate > 0 ? arrivals(rng) : 0;
    for (int e = 0; e < events; ++e) {
        const double center = duration_s * unit(rng);
        const double width = profile.event_duration_ms / 1000.0 * (0.5 + unit(rng));
        std::array<double, kChannels> peak{};
        for (int c = 0; c < kChannels; ++c) {
            const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
            peak[static_cast<std::size_t>(c)] =
                sign * gain * profile.channels[static_cast<std::size_t>(c)].event_amplitude * (0.5 + 0.5 * unit(rng));
        }
        if (width <= 0) continue;
        const auto first = std::max<Index>(0, static_cast<Index>(std::ceil((center - width / 2) * rate_hz)));
        const auto last = std::min<Index>(samples - 1, static_cast<Index>(std::floor((center + width / 2) * rate_hz)));
        for (Index t = first; t <= last; ++t) {
            const double u = (static_cast<double>(t) * dt - center) / width; // in [-1/2, 1/2]
            const double shape = 0.5 * (1.0 + std::cos(two_pi * u));
            for (int c = 0; c < kChannels; ++c) trip.samples(t, c) += peak[static_cast<std::size_t>(c)] * shape;
        }
    }
    return trip;
}

void SimulationSettings::validate() const {
    require(n >= 1, "simulate: n must be positive");
    require(labeled >= 0 && labeled <= n, "simulate: labeled must lie in [0, n]");
    require(labeled % 2 == 0, "simulate: labeled must be even");
    normal.validate();
    aggressive.validate();
}

void simulate_each(const SimulationSettings& settings, const std::function<void(RawTrip&&, DrivingStyle)>& sink) {
    settings.validate();
    for (int i = 0; i < settings.n; ++i) {
        const DrivingStyle truth = i % 2 == 0 ? DrivingStyle::normal : DrivingStyle::aggressive;
        StyleProfile profile = truth == DrivingStyle::normal ? settings.normal : settings.aggressive;
        profile.style = truth;
        Rng rng(derive_seed(settings.seed, static_cast<std::uint64_t>(i)));
        RawTrip trip = simulate_trip(profile, rng);
        std::ostringstream id;
        id << "trip_" << i;
        trip.id = id.str();
        if (i >= settings.labeled) trip.label.reset();
        sink(std::move(trip), truth);
    }
}

SimulatedDataset simulate_dataset(const SimulationSettings& settings) {
    SimulatedDataset out;
    out.labeled = static_cast<std::size_t>(settings.labeled);
    simulate_each(settings, [&](RawTrip&& trip, DrivingStyle truth) {
        out.trips.push_back(std::move(trip));
        out.truth.push_back(truth);
    });
    return out;
}

} // namespace imugan
