#pragma once

// Recurrent conditional GAN: an LSTM generator mapping per-step noise plus a
// one-hot driving-style condition to a sigmoid-bounded trip, and an LSTM
// discriminator scoring every time step of (trip, condition).

#include "imugan/rnn.hpp"
#include "imugan/trip.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace imugan {

inline constexpr Index kConditionDim = 2;

/// One-hot condition, normal = (1, 0), aggressive = (0, 1).
Vector one_hot(DrivingStyle style);

struct RcganConfig {
    double learning_rate = 0.001;   // generator (ADAM)
    double d_learning_rate = 1.0;   // discriminator (plain gradient descent)
    int batch_size = 1;
    int epochs = 5000;
    int g_rounds = 1;
    int d_rounds = 1;
    int hidden = 100;
    int latent = 25;
    double smooth = 0.1;
    int seq_len = kTripSeconds;
    int channels = kChannels;
    /// Use log(1 - D(G(z))) for the generator instead of -log D(G(z)).
    bool minimax_generator_loss = false;
    std::uint64_t seed = 0;

    void validate() const;
};

struct GeneratorNet {
    LstmParams lstm; // d_in = latent + 2
    Matrix w_out;    // channels x H
    Vector b_out;    // channels

    static GeneratorNet zeros(const RcganConfig& config);
    static GeneratorNet random(const RcganConfig& config, Rng& rng);

    Index latent() const { return lstm.input_dim() - kConditionDim; }
    Index channels() const { return w_out.rows(); }

    template <class F>
    void for_each_param(F&& f) {
        lstm.for_each_param(f);
        f("W_out", w_out), f("b_out", b_out);
    }
    template <class F>
    void for_each_param(F&& f) const {
        lstm.for_each_param(f);
        f("W_out", w_out), f("b_out", b_out);
    }
};

struct DiscriminatorNet {
    LstmParams lstm; // d_in = channels + 2
    Matrix w_out;    // 1 x H
    Vector b_out;    // 1

    static DiscriminatorNet zeros(const RcganConfig& config);
    static DiscriminatorNet random(const RcganConfig& config, Rng& rng);

    Index channels() const { return lstm.input_dim() - kConditionDim; }

    template <class F>
    void for_each_param(F&& f) {
        lstm.for_each_param(f);
        f("W_out", w_out), f("b_out", b_out);
    }
    template <class F>
    void for_each_param(F&& f) const {
        lstm.for_each_param(f);
        f("W_out", w_out), f("b_out", b_out);
    }
};

/// L x m matrix of i.i.d. N(0, 1) draws.
Matrix sample_noise(Rng& rng, Index length, Index latent);

/// Generated trip values (L x channels), all in (0, 1).
Matrix generate(const GeneratorNet& gen, const Matrix& noise, DrivingStyle style);

struct DiscriminatorScores {
    Vector per_step;
    double mean = 0.0;
};

DiscriminatorScores discriminate(const DiscriminatorNet& disc, const Matrix& trip, DrivingStyle style);

struct GanLosses {
    double d_loss = 0.0;
    double g_loss = 0.0;
};

/// d_loss = BCE(real, 1 - smooth) + BCE(fake, 0); g_loss = BCE(fake, 1), or
/// mean log(1 - D(fake)) with `minimax`. Each BCE term is averaged over steps.
GanLosses gan_losses(const Vector& d_real, const Vector& d_fake, double smooth, bool minimax = false);

struct DiscriminatorGradient {
    double loss = 0.0;
    DiscriminatorNet grad;
};

/// Discriminator loss on one (real, fake) pair with the same condition, and its
/// gradient with respect to the discriminator parameters.
DiscriminatorGradient discriminator_gradient(const DiscriminatorNet& disc, const Matrix& real, const Matrix& fake,
                                             DrivingStyle style, double smooth);

struct GeneratorGradient {
    double loss = 0.0;
    GeneratorNet grad;
};

/// Generator loss for one noise draw, back-propagated through the (frozen)
/// discriminator into the generator parameters.
GeneratorGradient generator_gradient(const GeneratorNet& gen, const DiscriminatorNet& disc, const Matrix& noise,
                                     DrivingStyle style, bool minimax = false);

struct LossRecord {
    int epoch = 0;
    double d_loss = 0.0;
    double g_loss = 0.0;
};

struct RcganModel {
    GeneratorNet generator;
    DiscriminatorNet discriminator;
    std::vector<LossRecord> history;
};

using EpochCallback = std::function<void(const LossRecord&)>;

/// Alternating training, batch size 1: for each trip in a shuffled order,
/// d_rounds discriminator SGD steps then g_rounds generator ADAM steps.
RcganModel train_rcgan(const std::vector<Trip>& trips, const RcganConfig& config, Rng& rng,
                       const EpochCallback& on_epoch = {});

/// round(ratio * base_count) trips split evenly between the two styles.
std::vector<Trip> synthesize(const GeneratorNet& gen, double ratio, int base_count, Rng& rng,
                             std::string_view id_prefix = "fake", Index length = kTripSeconds);

} // namespace imugan
