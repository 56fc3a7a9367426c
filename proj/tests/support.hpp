#pragma once

// Test-only oracles: independent, definition-level implementations used to
// cross-check the library, plus the finite-difference gradient checks shared by
// the unit tests and the acceptance suite.

#include "imugan/numerics.hpp"
#include "imugan/rcgan.hpp"
#include "imugan/rnn.hpp"
#include "imugan/semisup.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

using imugan::Index;
using imugan::Matrix;
using imugan::Vector;

/// Pairwise Mann-Whitney count over every (positive, negative) pair.
inline double auroc_pairs(const std::vector<double>& scores, const std::vector<int>& labels) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

inline double mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// (1/L) sum (x - mean)^k with repeated multiplication.
inline double central_moment(const std::vector<double>& x, int k) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) {
        double term = 1.0;
        for (int p = 0; p < k; ++p) term *= v - m;
        s += term;
    }
    return s / static_cast<double>(x.size());
}

inline double stddev(const std::vector<double>& x) { return std::sqrt(central_moment(x, 2)); }

inline double skewness(const std::vector<double>& x) {
    const double s = stddev(x);
    return s == 0.0 ? 0.0 : central_moment(x, 3) / (s * s * s);
}

inline double kurtosis(const std::vector<double>& x) {
    const double s = stddev(x);
    return s == 0.0 ? 0.0 : central_moment(x, 4) / (s * s * s * s);
}

/// Linear interpolation between order statistics at rank (p/100)(L-1).
inline double percentile(std::vector<double> x, double p) {
    std::sort(x.begin(), x.end());
    const double rank = p / 100.0 * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= x.size()) return x.back();
    const double frac = rank - static_cast<double>(lo);
    return x[lo] * (1.0 - frac) + x[lo + 1] * frac;
}

/// Ten equal-width bins over [min, max]; the last bin is closed. Center of the
/// fullest bin, lowest bin on ties; a constant series returns its value.
inline double mode(const std::vector<double>& x) {
    const double lo = *std::min_element(x.begin(), x.end());
    const double hi = *std::max_element(x.begin(), x.end());
    if (lo == hi) return lo;
    const double width = (hi - lo) / 10.0;
    int best = 0, best_count = -1;
    for (int b = 0; b < 10; ++b) {
        int count = 0;
        for (double v : x) {
            const int bin = std::min(9, static_cast<int>((v - lo) / width));
            if (bin == b) ++count;
        }
        if (count > best_count) best = b, best_count = count;
    }
    return lo + (best + 0.5) * width;
}

/// Trailing moving average as a convolution with a warm-up normalizer.
inline std::vector<double> moving_average(const std::vector<double>& x, int w) {
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t t = 0; t < x.size(); ++t) {
        double acc = 0.0;
        int n = 0;
        for (int k = 0; k < w; ++k) {
            if (static_cast<long>(t) - k < 0) break;
            acc += x[t - static_cast<std::size_t>(k)];
            ++n;
        }
        y[t] = acc / n;
    }
    return y;
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// One peephole-LSTM step written gate by gate from the cell equations.
inline void lstm_step(const imugan::LstmParams& p, const Vector& x, const Vector& h_prev, const Vector& c_prev,
                      Vector& h, Vector& c) {
    const Index H = p.hidden();
    h.resize(H);
    c.resize(H);
    for (Index k = 0; k < H; ++k) {
        auto pre = [&](int gate) {
            double s = p.b[gate * H + k];
            for (Index j = 0; j < x.size(); ++j) s += p.w(gate * H + k, j) * x[j];
            for (Index j = 0; j < H; ++j) s += p.u(gate * H + k, j) * h_prev[j];
            return s;
        };
        const double i = logistic(pre(0) + p.peephole[k] * c_prev[k]);
        const double f = logistic(pre(1) + p.peephole[H + k] * c_prev[k]);
        const double o = logistic(pre(2) + p.peephole[2 * H + k] * c_prev[k]);
        const double g = std::tanh(pre(3));
        c[k] = f * c_prev[k] + i * g;
        h[k] = o * std::tanh(c[k]);
    }
}

// ---------------------------------------------------------------------------
// Gradient checks (analytic vs central differences, h = 1e-5)

inline constexpr double kStep = 1e-5;

/// Max relative error between the analytic gradient `analytic` of `loss` at
/// `net` and central differences of `loss`.
template <class Net, class Loss>
double gradient_error(const Net& net, const Net& analytic, Loss loss) {
    const imugan::ParamVector theta = imugan::flatten(net);
    const imugan::ParamVector numeric = imugan::numeric_gradient(
        [&](const imugan::ParamVector& p) {
            Net copy = net;
            imugan::unflatten(p, copy);
            return loss(copy);
        },
        theta, kStep);
    return imugan::max_relative_error(imugan::flatten(analytic).values, numeric.values);
}

template <class Net>
void scale_params(Net& net, double factor) {
    net.for_each_param([&](std::string_view, auto& m) { m *= factor; });
}

inline Matrix uniform_matrix(imugan::Rng& rng, Index rows, Index cols, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
    return m;
}

/// LSTM (H = 4, L = 5): loss = sum_t r_t . h_t for fixed random weights r.
inline double lstm_gradient_error(std::uint64_t seed) {
    imugan::Rng rng(seed);
    const imugan::LstmParams params = imugan::LstmParams::random(3, 4, rng, 0.5);
    const Matrix inputs = uniform_matrix(rng, 3, 5, -1, 1);
    const Matrix weights = uniform_matrix(rng, 4, 5, -1, 1);
    auto loss = [&](const imugan::LstmParams& p) {
        return (imugan::lstm_unroll(p, inputs).hidden.array() * weights.array()).sum();
    };
    const imugan::LstmGradient g = imugan::lstm_backward(params, imugan::lstm_unroll(params, inputs), weights);
    return gradient_error(params, g.params, loss);
}

/// Vanilla RNN (H = 4, L = 5) with per-step softmax cross-entropy.
inline double rnn_gradient_error(std::uint64_t seed) {
    imugan::Rng rng(seed);
    const imugan::RnnParams params = imugan::RnnParams::random(3, 4, 2, rng, 0.5);
    const Matrix inputs = uniform_matrix(rng, 3, 5, -1, 1);
    std::vector<int> targets;
    for (int t = 0; t < 5; ++t) targets.push_back(static_cast<int>(rng() % 2));
    auto loss = [&](const imugan::RnnParams& p) { return imugan::rnn_cross_entropy(p, inputs, targets).loss; };
    return gradient_error(params, imugan::rnn_cross_entropy(params, inputs, targets).grad, loss);
}

inline imugan::RcganConfig small_gan_config() {
    imugan::RcganConfig c;
    c.hidden = 4;
    c.latent = 3;
    c.seq_len = 5;
    return c;
}

inline double discriminator_gradient_error(std::uint64_t seed) {
    imugan::Rng rng(seed);
    const imugan::RcganConfig config = small_gan_config();
    imugan::DiscriminatorNet disc = imugan::DiscriminatorNet::random(config, rng);
    scale_params(disc, 6.0);
    const Matrix real = uniform_matrix(rng, config.seq_len, config.channels, 0, 1);
    const Matrix fake = uniform_matrix(rng, config.seq_len, config.channels, 0, 1);
    const auto style = seed % 2 ? imugan::DrivingStyle::aggressive : imugan::DrivingStyle::normal;
    auto loss = [&](const imugan::DiscriminatorNet& d) {
        return imugan::discriminator_gradient(d, real, fake, style, config.smooth).loss;
    };
    return gradient_error(disc, imugan::discriminator_gradient(disc, real, fake, style, config.smooth).grad, loss);
}

inline double generator_gradient_error(std::uint64_t seed, bool minimax) {
    imugan::Rng rng(seed);
    const imugan::RcganConfig config = small_gan_config();
    imugan::GeneratorNet gen = imugan::GeneratorNet::random(config, rng);
    imugan::DiscriminatorNet disc = imugan::DiscriminatorNet::random(config, rng);
    scale_params(gen, 6.0);
    scale_params(disc, 6.0);
    const Matrix noise = imugan::sample_noise(rng, config.seq_len, config.latent);
    const auto style = seed % 2 ? imugan::DrivingStyle::aggressive : imugan::DrivingStyle::normal;
    auto loss = [&](const imugan::GeneratorNet& g) {
        return imugan::generator_gradient(g, disc, noise, style, minimax).loss;
    };
    return gradient_error(gen, imugan::generator_gradient(gen, disc, noise, style, minimax).grad, loss);
}

inline const std::vector<int> kSmallAutoencoder = {6, 4, 2, 4, 6};

inline double autoencoder_gradient_error(std::uint64_t seed) {
    imugan::Rng rng(seed);
    imugan::AutoencoderParams ae = imugan::init_autoencoder(kSmallAutoencoder, rng);
    scale_params(ae, 6.0);
    const Matrix data = uniform_matrix(rng, 8, 6, 0, 1);
    auto loss = [&](const imugan::AutoencoderParams& p) { return imugan::reconstruction_loss(p, data); };
    return gradient_error(ae, imugan::reconstruction_gradient(ae, data).grad, loss);
}

inline double classifier_gradient_error(std::uint64_t seed, imugan::Activation activation) {
    imugan::Rng rng(seed);
    imugan::AutoencoderParams ae = imugan::init_autoencoder(kSmallAutoencoder, rng);
    scale_params(ae, 6.0);
    imugan::ClassifierParams model = imugan::transfer_weights(ae, activation, rng);
    model.output.w *= 6.0;
    imugan::LabeledSet data{uniform_matrix(rng, 8, 6, 0, 1), {}};
    for (int i = 0; i < 8; ++i) data.y.push_back(i % 2);
    auto loss = [&](const imugan::ClassifierParams& p) { return imugan::cross_entropy(p, data); };
    return gradient_error(model, imugan::cross_entropy_gradient(model, data).grad, loss);
}

} // namespace oracle
