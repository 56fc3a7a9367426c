#include "imugan/preprocess.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace imugan;

namespace {

RawTrip ramp_trip(Index samples) {
    RawTrip raw{"ramp", Matrix(samples, kChannels), DrivingStyle::normal};
    for (Index t = 0; t < samples; ++t) raw.samples.row(t).setConstant(static_cast<double>(t));
    return raw;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

TEST(Downsample, RampKeepsEveryThousandthSample) {
    const Matrix out = downsample(ramp_trip(60000));
    ASSERT_EQ(out.rows(), 60);
    ASSERT_EQ(out.cols(), kChannels);
    for (Index r = 0; r < 60; ++r) EXPECT_EQ(out(r, 2), 1000.0 * static_cast<double>(r));
}

TEST(Downsample, ConstantSignalStaysConstant) {
    RawTrip raw{"c", Matrix::Constant(60000, kChannels, 2.5), std::nullopt};
    EXPECT_TRUE((downsample(raw).array() == 2.5).all());
}

TEST(Downsample, LongerTripKeepsAllSeconds) {
    EXPECT_EQ(downsample(ramp_trip(120500)).rows(), 121);
}

TEST(Downsample, ShortTripErrorNamesTrip) {
    RawTrip raw = ramp_trip(59999);
    raw.id = "trip_42";
    try {
        downsample(raw);
        FAIL() << "expected ContractViolation";
    } catch (const ContractViolation& e) {
        EXPECT_NE(std::string(e.what()).find("trip_42"), std::string::npos);
    }
}

TEST(MovingAverage, Fixtures) {
    EXPECT_EQ(moving_average(Vector{{1.0, 2.0, 3.0}}, 2), (Vector{{1.0, 1.5, 2.5}}));
    for (double c : {0.25, 0.7, -3.1, 1e-9})
        EXPECT_TRUE((moving_average(Vector::Constant(60, c), 10).array() == c).all()) << c;
}

TEST(MovingAverage, ImpulseResponse) {
    Vector impulse = Vector::Zero(60);
    impulse[0] = 1.0;
    const Vector y = moving_average(impulse, 10);
    const std::vector<double> ref = oracle::moving_average(to_std(impulse), 10);
    for (Index t = 0; t < 60; ++t) {
        EXPECT_EQ(y[t], t <= 9 ? 1.0 / static_cast<double>(t + 1) : 0.0) << t;
        EXPECT_EQ(y[t], ref[static_cast<std::size_t>(t)]) << t;
    }
}

TEST(MovingAverage, MatchesConvolutionOracle) {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        Vector x(1 + static_cast<Index>(rng() % 80));
        fill_uniform(x, rng, 5.0);
        const int w = 1 + static_cast<int>(rng() % 15);
        const Vector y = moving_average(x, w);
        const std::vector<double> ref = oracle::moving_average(to_std(x), w);
        for (Index t = 0; t < x.size(); ++t) EXPECT_NEAR(y[t], ref[static_cast<std::size_t>(t)], 1e-12);
    }
}

TEST(MovingAverage, IsLinear) {
    Rng rng(4);
    Vector x(60), y(60);
    fill_uniform(x, rng, 3.0);
    fill_uniform(y, rng, 3.0);
    const double a = 1.7, b = -0.4;
    const Vector lhs = moving_average(a * x + b * y, 10);
    const Vector rhs = a * moving_average(x, 10) + b * moving_average(y, 10);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MovingAverage, RejectsZeroWindow) { EXPECT_THROW(moving_average(Vector::Ones(3), 0), ContractViolation); }

TEST(Truncate, KeepsLeadingRowsInOrder) {
    Rng rng(5);
    const Matrix m = oracle::uniform_matrix(rng, 120, kChannels, -1, 1);
    EXPECT_EQ(truncate(m), m.topRows(60));
    EXPECT_EQ(truncate(m.topRows(60)), m.topRows(60));
    EXPECT_THROW(truncate(m.topRows(59)), ContractViolation);
}

TEST(MinMax, FitFixtures) {
    Matrix a(3, 2);
    a << 0, 1, 5, 1, 10, 1;
    const ScalerParams p = fit_minmax(std::span<const Matrix>(&a, 1));
    EXPECT_EQ(p.min[0], 0.0);
    EXPECT_EQ(p.max[0], 10.0);
    EXPECT_FALSE(p.degenerate[0]);
    EXPECT_TRUE(p.degenerate[1]);

    const std::vector<Matrix> two = {Matrix::Constant(2, 1, 3.0), Matrix::Constant(2, 1, -4.0)};
    const ScalerParams q = fit_minmax(std::span<const Matrix>(two));
    EXPECT_EQ(q.min[0], -4.0);
    EXPECT_EQ(q.max[0], 3.0);

    EXPECT_THROW(fit_minmax(std::span<const Matrix>()), ContractViolation);
}

TEST(MinMax, ApplyFixtures) {
    Matrix a(3, 2);
    a << 0, 1, 5, 1, 10, 1;
    const ScalerParams p = fit_minmax(std::span<const Matrix>(&a, 1));
    const Matrix s = apply_minmax(p, a);
    EXPECT_EQ(s.col(0), (Vector{{0.0, 0.5, 1.0}}));
    EXPECT_EQ(s.col(1), Vector::Zero(3));

    Matrix test(1, 2);
    test << 12, 7;
    EXPECT_EQ(apply_minmax(p, test)(0, 0), 1.2);
}

TEST(MinMax, InvertRecoversInput) {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix fit = oracle::uniform_matrix(rng, 60, kChannels, -20, 20);
        const ScalerParams p = fit_minmax(std::span<const Matrix>(&fit, 1));
        const Matrix other = oracle::uniform_matrix(rng, 60, kChannels, -30, 30);
        EXPECT_LE((invert_minmax(p, apply_minmax(p, fit)) - fit).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((invert_minmax(p, apply_minmax(p, other)) - other).cwiseAbs().maxCoeff(), 1e-12);
        const Matrix scaled = apply_minmax(p, fit);
        EXPECT_TRUE((scaled.array() >= 0.0).all() && (scaled.array() <= 1.0).all());
    }
}

TEST(MinMax, ChannelMismatchThrows) {
    const Matrix a = Matrix::Ones(2, 3);
    const ScalerParams p = fit_minmax(std::span<const Matrix>(&a, 1));
    EXPECT_THROW(apply_minmax(p, Matrix::Ones(2, 2)), ContractViolation);
}

TEST(Pipeline, ShapeRangeAndDeterminism) {
    Rng rng(7);
    std::vector<RawTrip> raw;
    for (int k = 0; k < 4; ++k) {
        RawTrip r{"t" + std::to_string(k), oracle::uniform_matrix(rng, 61000, kChannels, -2, 2), DrivingStyle::normal};
        raw.push_back(std::move(r));
    }
    const std::vector<std::size_t> fit = {0, 1};
    const ProcessedDataset a = preprocess_pipeline(raw, fit);
    const ProcessedDataset b = preprocess_pipeline(raw, fit);
    ASSERT_EQ(a.trips.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(a.trips[k].values.rows(), 60);
        EXPECT_EQ(a.trips[k].values.cols(), kChannels);
        EXPECT_EQ(a.trips[k].values, b.trips[k].values);
        EXPECT_EQ(a.trips[k].id, raw[k].id);
    }
    for (std::size_t k : fit)
        EXPECT_TRUE((a.trips[k].values.array() >= 0.0).all() && (a.trips[k].values.array() <= 1.0).all());
    EXPECT_EQ(a.scaler, b.scaler);
}

TEST(Pipeline, ConditionMatchesStageComposition) {
    const RawTrip raw = ramp_trip(60000);
    const Trip t = condition_trip(raw);
    const Matrix slow = downsample(raw);
    for (Index c = 0; c < kChannels; ++c) EXPECT_EQ(t.values.col(c), moving_average(slow.col(c), 10));
}

TEST(Pipeline, SecondPassRejectedWithTripId) {
    Rng rng(8);
    std::vector<RawTrip> raw = {RawTrip{"once", oracle::uniform_matrix(rng, 60000, kChannels, 0, 1), std::nullopt}};
    const ProcessedDataset first = preprocess_pipeline(raw, std::vector<std::size_t>{0});
    std::vector<RawTrip> again = {RawTrip{"once", first.trips[0].values, std::nullopt}};
    try {
        preprocess_pipeline(again, std::vector<std::size_t>{0});
        FAIL() << "expected ContractViolation";
    } catch (const ContractViolation& e) {
        EXPECT_NE(std::string(e.what()).find("once"), std::string::npos);
    }
    EXPECT_THROW(preprocess_pipeline(raw, std::vector<std::size_t>{}), ContractViolation);
}
