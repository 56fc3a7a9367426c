#pragma once

// Raw-signal conditioning: 1000 Hz -> 1 Hz decimation, trailing moving average,
// one-minute truncation and per-channel MinMax scaling.

#include "imugan/trip.hpp"

#include <span>
#include <vector>

namespace imugan {

/// Per-channel extrema from a fit set. Constant channels are flagged degenerate
/// and scale to 0.
struct ScalerParams {
    Vector min;
    Vector max;
    std::vector<bool> degenerate;

    Index channels() const { return min.size(); }
    bool operator==(const ScalerParams&) const = default;
};

/// Rows 0, factor, 2*factor, ... of the raw samples. Requires at least
/// `min_seconds * factor` samples.
Matrix downsample(const RawTrip& raw, int factor = kRawRateHz, int min_seconds = kTripSeconds);

/// Trailing mean over the last min(t + 1, window) samples.
Vector moving_average(const Vector& series, int window = 10);

Matrix truncate(const Matrix& values, Index rows = kTripSeconds);

/// Fit over the rows of every matrix (each row is one observation).
ScalerParams fit_minmax(std::span<const Matrix> blocks);
ScalerParams fit_minmax(std::span<const Trip> trips);

/// (x - min) / (max - min) per column; no clipping.
Matrix apply_minmax(const ScalerParams& params, const Matrix& values);
Matrix invert_minmax(const ScalerParams& params, const Matrix& scaled);

/// Downsample, filter each channel, truncate. No scaling.
Trip condition_trip(const RawTrip& raw, int window = 10);

struct ProcessedDataset {
    std::vector<Trip> trips;
    ScalerParams scaler;
};

/// Conditions every raw trip, fits MinMax on the trips at `fit_indices`, and
/// applies it to all of them.
ProcessedDataset preprocess_pipeline(std::span<const RawTrip> raw, std::span<const std::size_t> fit_indices);

/// Same as above for trips that have already been conditioned.
ProcessedDataset scale_dataset(std::vector<Trip> conditioned, std::span<const std::size_t> fit_indices);

} // namespace imugan
