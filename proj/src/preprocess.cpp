#include "imugan/preprocess.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace imugan {

Matrix downsample(const RawTrip& raw, int factor, int min_seconds) {
    require(factor >= 1, "downsample: factor must be positive");
    const Index needed = static_cast<Index>(factor) * min_seconds;
    if (raw.samples.rows() < needed)
        throw ContractViolation("downsample: trip '" + raw.id + "' has " + std::to_string(raw.samples.rows()) +
                                " samples, needs at least " + std::to_string(needed));
    const Index rows = (raw.samples.rows() + factor - 1) / factor;
    Matrix out(rows, raw.samples.cols());
    for (Index r = 0; r < rows; ++r) out.row(r) = raw.samples.row(r * factor);
    return out;
}

Vector moving_average(const Vector& series, int window) {
    require(window >= 1, "moving_average: window must be at least 1");
    Vector out(series.size());
    for (Index t = 0; t < series.size(); ++t) {
        const Index start = std::max<Index>(0, t - window + 1);
        const auto span = series.segment(start, t - start + 1);
        // Offsets from the window minimum keep constant windows exact.
        const double floor = span.minCoeff();
        out[t] = floor + (span.array() - floor).sum() / static_cast<double>(span.size());
    }
    return out;
}

Matrix truncate(const Matrix& values, Index rows) {
    require(values.rows() >= rows,
            "truncate: need " + std::to_string(rows) + " rows, got " + std::to_string(values.rows()));
    return values.topRows(rows);
}

ScalerParams fit_minmax(std::span<const Matrix> blocks) {
    require(!blocks.empty(), "fit_minmax: empty fit set");
    const Index channels = blocks.front().cols();
    ScalerParams p{Vector::Constant(channels, std::numeric_limits<double>::infinity()),
                   Vector::Constant(channels, -std::numeric_limits<double>::infinity()),
                   std::vector<bool>(static_cast<std::size_t>(channels), false)};
    bool any_rows = false;
    for (const Matrix& block : blocks) {
        require(block.cols() == channels, "fit_minmax: inconsistent channel count");
        if (block.rows() == 0) continue;
        any_rows = true;
        p.min = p.min.cwiseMin(block.colwise().minCoeff().transpose());
        p.max = p.max.cwiseMax(block.colwise().maxCoeff().transpose());
    }
    require(any_rows, "fit_minmax: fit set has no observations");
    for (Index c = 0; c < channels; ++c) p.degenerate[static_cast<std::size_t>(c)] = p.min[c] == p.max[c];
    return p;
}

ScalerParams fit_minmax(std::span<const Trip> trips) {
    std::vector<Matrix> blocks;
    blocks.reserve(trips.size());
    for (const Trip& t : trips) blocks.push_back(t.values);
    return fit_minmax(std::span<const Matrix>(blocks));
}

Matrix apply_minmax(const ScalerParams& params, const Matrix& values) {
    require(values.cols() == params.channels(), "apply_minmax: channel count mismatch");
    Matrix out(values.rows(), values.cols());
    for (Index c = 0; c < values.cols(); ++c) {
        if (params.degenerate[static_cast<std::size_t>(c)]) {
            out.col(c).setZero();
            continue;
        }
        const double span = params.max[c] - params.min[c];
        out.col(c) = (values.col(c).array() - params.min[c]) / span;
    }
    return out;
}

Matrix invert_minmax(const ScalerParams& params, const Matrix& scaled) {
    require(scaled.cols() == params.channels(), "invert_minmax: channel count mismatch");
    Matrix out(scaled.rows(), scaled.cols());
    for (Index c = 0; c < scaled.cols(); ++c) {
        if (params.degenerate[static_cast<std::size_t>(c)]) {
            out.col(c).setConstant(params.min[c]);
            continue;
        }
        const double span = params.max[c] - params.min[c];
        out.col(c) = scaled.col(c).array() * span + params.min[c];
    }
    return out;
}

Trip condition_trip(const RawTrip& raw, int window) {
    Matrix slow = downsample(raw);
    for (Index c = 0; c < slow.cols(); ++c) slow.col(c) = moving_average(slow.col(c), window);
    return Trip{raw.id, truncate(slow), raw.label};
}

ProcessedDataset scale_dataset(std::vector<Trip> conditioned, std::span<const std::size_t> fit_indices) {
    require(!fit_indices.empty(), "preprocess: fit subset is empty");
    std::vector<Matrix> fit;
    fit.reserve(fit_indices.size());
    for (std::size_t i : fit_indices) {
        require(i < conditioned.size(), "preprocess: fit index out of range");
        fit.push_back(conditioned[i].values);
    }
    ProcessedDataset out{std::move(conditioned), fit_minmax(std::span<const Matrix>(fit))};
    for (Trip& t : out.trips) t.values = apply_minmax(out.scaler, t.values);
    return out;
}

ProcessedDataset preprocess_pipeline(std::span<const RawTrip> raw, std::span<const std::size_t> fit_indices) {
    std::vector<Trip> conditioned;
    conditioned.reserve(raw.size());
    for (const RawTrip& r : raw) {
        try {
            conditioned.push_back(condition_trip(r));
        } catch (const ContractViolation& e) {
            throw ContractViolation(std::string("preprocess: trip '") + r.id + "': " + e.what());
        }
    }
    return scale_dataset(std::move(conditioned), fit_indices);
}

} // namespace imugan
