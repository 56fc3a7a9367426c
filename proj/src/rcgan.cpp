#include "imugan/rcgan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace imugan {

namespace {

constexpr double kScoreClamp = 1e-12;
constexpr double kInitLimit = 0.08;

double clamp_score(double s) {
    return std::clamp(s, kScoreClamp, 1.0 - kScoreClamp);
}

// Mean over steps of -[target log s + (1 - target) log(1 - s)].
double mean_bce(const Vector& scores, double target) {
    double acc = 0.0;
    for (Index t = 0; t < scores.size(); ++t) {
        const double s = clamp_score(scores[t]);
        acc -= target * std::log(s) + (1.0 - target) * std::log(1.0 - s);
    }
    return acc / static_cast<double>(scores.size());
}

// Stacks (values^T ; one-hot) into the (channels + 2) x L discriminator input.
Matrix conditioned_columns(const Matrix& rows_by_time, DrivingStyle style) {
    const Index length = rows_by_time.rows();
    Matrix x(rows_by_time.cols() + kConditionDim, length);
    x.topRows(rows_by_time.cols()) = rows_by_time.transpose();
    x.bottomRows(kConditionDim).colwise() = one_hot(style);
    return x;
}

Vector sigmoid_rows(const Matrix& logits) {
    Vector out(logits.cols());
    for (Index t = 0; t < logits.cols(); ++t) out[t] = sigmoid(logits(0, t));
    return out;
}

struct GeneratorForward {
    LstmTrace trace;
    Matrix output; // channels x L, in (0, 1)
};

GeneratorForward generator_forward(const GeneratorNet& gen, const Matrix& noise, DrivingStyle style) {
    require(noise.cols() == gen.latent(), "generate: noise has " + std::to_string(noise.cols()) +
                                              " columns, generator expects " + std::to_string(gen.latent()));
    GeneratorForward fwd{lstm_unroll(gen.lstm, conditioned_columns(noise, style)), Matrix()};
    fwd.output.noalias() = gen.w_out * fwd.trace.hidden;
    fwd.output.colwise() += gen.b_out;
    fwd.output = fwd.output.unaryExpr([](double z) { return sigmoid(z); });
    return fwd;
}

struct DiscriminatorForward {
    LstmTrace trace;
    Vector scores;
};

DiscriminatorForward discriminator_forward(const DiscriminatorNet& disc, const Matrix& columns) {
    DiscriminatorForward fwd{lstm_unroll(disc.lstm, columns), Vector()};
    Matrix logits = disc.w_out * fwd.trace.hidden;
    logits.array() += disc.b_out[0];
    fwd.scores = sigmoid_rows(logits);
    return fwd;
}

// Accumulates parameter gradients of the discriminator (when `grad` is set)
// for dLoss/dlogit_t and returns the gradient with respect to its input columns.
Matrix discriminator_backward(const DiscriminatorNet& disc, const DiscriminatorForward& fwd,
                              const Vector& d_logits, DiscriminatorNet* grad_ptr) {
    const Matrix d_logit_row = d_logits.transpose();
    const Matrix d_hidden = disc.w_out.transpose() * d_logit_row;
    LstmGradient lg = lstm_backward(disc.lstm, fwd.trace, d_hidden, grad_ptr != nullptr);
    if (!grad_ptr) return lg.inputs;
    DiscriminatorNet& grad = *grad_ptr;
    grad.w_out.noalias() += d_logit_row * fwd.trace.hidden.transpose();
    grad.b_out[0] += d_logits.sum();
    grad.lstm.w += lg.params.w;
    grad.lstm.u += lg.params.u;
    grad.lstm.peephole += lg.params.peephole;
    grad.lstm.b += lg.params.b;
    return lg.inputs;
}

void check_trip_shape(const Matrix& trip, Index channels, const char* where) {
    require(trip.cols() == channels && trip.rows() >= 1,
            std::string(where) + ": trip must be L x " + std::to_string(channels) + ", got " +
                std::to_string(trip.rows()) + " x " + std::to_string(trip.cols()));
    require(trip.allFinite(), std::string(where) + ": trip contains non-finite values");
}

} // namespace

Vector one_hot(DrivingStyle style) {
    Vector v = Vector::Zero(kConditionDim);
    v[static_cast<int>(style)] = 1.0;
    return v;
}

void RcganConfig::validate() const {
    require(learning_rate >= 0 && d_learning_rate >= 0, "rcgan config: learning rates must be non-negative");
    require(batch_size == 1, "rcgan config: only batch size 1 is supported");
    require(epochs >= 0, "rcgan config: epochs must be non-negative");
    require(g_rounds >= 1 && d_rounds >= 1, "rcgan config: rounds must be positive");
    require(hidden >= 1 && latent >= 1 && seq_len >= 1 && channels >= 1, "rcgan config: sizes must be positive");
    require(smooth >= 0.0 && smooth < 0.5, "rcgan config: smooth must lie in [0, 0.5)");
}

GeneratorNet GeneratorNet::zeros(const RcganConfig& config) {
    return GeneratorNet{LstmParams::zeros(config.latent + kConditionDim, config.hidden),
                        Matrix::Zero(config.channels, config.hidden), Vector::Zero(config.channels)};
}

GeneratorNet GeneratorNet::random(const RcganConfig& config, Rng& rng) {
    GeneratorNet g = zeros(config);
    g.for_each_param([&](std::string_view, auto& m) { fill_uniform(m, rng, kInitLimit); });
    return g;
}

DiscriminatorNet DiscriminatorNet::zeros(const RcganConfig& config) {
    return DiscriminatorNet{LstmParams::zeros(config.channels + kConditionDim, config.hidden),
                            Matrix::Zero(1, config.hidden), Vector::Zero(1)};
}

DiscriminatorNet DiscriminatorNet::random(const RcganConfig& config, Rng& rng) {
    DiscriminatorNet d = zeros(config);
    d.for_each_param([&](std::string_view, auto& m) { fill_uniform(m, rng, kInitLimit); });
    return d;
}

Matrix sample_noise(Rng& rng, Index length, Index latent) {
    require(length > 0 && latent > 0, "sample_noise: sizes must be positive");
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix z(length, latent);
    for (Index t = 0; t < length; ++t)
        for (Index j = 0; j < latent; ++j) z(t, j) = normal(rng);
    return z;
}

Matrix generate(const GeneratorNet& gen, const Matrix& noise, DrivingStyle style) {
    return generator_forward(gen, noise, style).output.transpose();
}

DiscriminatorScores discriminate(const DiscriminatorNet& disc, const Matrix& trip, DrivingStyle style) {
    check_trip_shape(trip, disc.channels(), "discriminate");
    DiscriminatorForward fwd = discriminator_forward(disc, conditioned_columns(trip, style));
    return DiscriminatorScores{fwd.scores, fwd.scores.mean()};
}

GanLosses gan_losses(const Vector& d_real, const Vector& d_fake, double smooth, bool minimax) {
    require(d_real.size() > 0 && d_fake.size() > 0, "gan_losses: empty score vectors");
    GanLosses out;
    out.d_loss = mean_bce(d_real, 1.0 - smooth) + mean_bce(d_fake, 0.0);
    if (minimax) {
        double acc = 0.0;
        for (Index t = 0; t < d_fake.size(); ++t) acc += std::log(1.0 - clamp_score(d_fake[t]));
        out.g_loss = acc / static_cast<double>(d_fake.size());
    } else {
        out.g_loss = mean_bce(d_fake, 1.0);
    }
    return out;
}

DiscriminatorGradient discriminator_gradient(const DiscriminatorNet& disc, const Matrix& real, const Matrix& fake,
                                             DrivingStyle style, double smooth) {
    check_trip_shape(real, disc.channels(), "discriminator_gradient");
    check_trip_shape(fake, disc.channels(), "discriminator_gradient");
    const DiscriminatorForward on_real = discriminator_forward(disc, conditioned_columns(real, style));
    const DiscriminatorForward on_fake = discriminator_forward(disc, conditioned_columns(fake, style));

    DiscriminatorGradient out{gan_losses(on_real.scores, on_fake.scores, smooth).d_loss, disc};
    out.grad.for_each_param([](std::string_view, auto& m) { m.setZero(); });

    // d/dlogit of BCE(sigmoid(logit), target) is (s - target).
    const double real_target = 1.0 - smooth;
    const Vector d_real = (on_real.scores.array() - real_target) / static_cast<double>(real.rows());
    const Vector d_fake = on_fake.scores / static_cast<double>(fake.rows());
    discriminator_backward(disc, on_real, d_real, &out.grad);
    discriminator_backward(disc, on_fake, d_fake, &out.grad);
    return out;
}

GeneratorGradient generator_gradient(const GeneratorNet& gen, const DiscriminatorNet& disc, const Matrix& noise,
                                     DrivingStyle style, bool minimax) {
    require(gen.channels() == disc.channels(), "generator_gradient: generator/discriminator channel mismatch");
    const GeneratorForward g_fwd = generator_forward(gen, noise, style);
    Matrix d_columns(g_fwd.output.rows() + kConditionDim, g_fwd.output.cols());
    d_columns.topRows(g_fwd.output.rows()) = g_fwd.output;
    d_columns.bottomRows(kConditionDim).colwise() = one_hot(style);
    const DiscriminatorForward d_fwd = discriminator_forward(disc, d_columns);

    GeneratorGradient out{0.0, gen};
    out.grad.for_each_param([](std::string_view, auto& m) { m.setZero(); });
    const double length = static_cast<double>(d_fwd.scores.size());
    Vector d_logits;
    if (minimax) {
        // d/dlogit log(1 - sigmoid(logit)) = -s
        out.loss = gan_losses(d_fwd.scores, d_fwd.scores, 0.0, true).g_loss;
        d_logits = -d_fwd.scores / length;
    } else {
        out.loss = mean_bce(d_fwd.scores, 1.0);
        d_logits = (d_fwd.scores.array() - 1.0) / length;
    }

    const Matrix d_inputs = discriminator_backward(disc, d_fwd, d_logits, nullptr);

    const Matrix& y = g_fwd.output;
    const Matrix d_out_logits =
        (d_inputs.topRows(y.rows()).array() * y.array() * (1.0 - y.array())).matrix();
    out.grad.w_out.noalias() = d_out_logits * g_fwd.trace.hidden.transpose();
    out.grad.b_out = d_out_logits.rowwise().sum();
    const Matrix d_hidden = gen.w_out.transpose() * d_out_logits;
    out.grad.lstm = lstm_backward(gen.lstm, g_fwd.trace, d_hidden).params;
    return out;
}

RcganModel train_rcgan(const std::vector<Trip>& trips, const RcganConfig& config, Rng& rng,
                       const EpochCallback& on_epoch) {
    config.validate();
    require(!trips.empty(), "train_rcgan: empty training set");
    std::size_t normal = 0, aggressive = 0;
    for (const Trip& trip : trips) {
        require(trip.label.has_value(), "train_rcgan: trip '" + trip.id + "' has no label");
        require(trip.values.rows() == config.seq_len && trip.values.cols() == config.channels,
                "train_rcgan: trip '" + trip.id + "' has the wrong shape");
        require(trip.values.allFinite(), "train_rcgan: trip '" + trip.id + "' contains non-finite values");
        (*trip.label == DrivingStyle::aggressive ? aggressive : normal) += 1;
    }
    require(normal == aggressive, "train_rcgan: classes must be balanced (" + std::to_string(normal) + " normal vs " +
                                      std::to_string(aggressive) + " aggressive)");

    RcganModel model{GeneratorNet::random(config, rng), DiscriminatorNet::random(config, rng), {}};
    ParamVector g_flat = flatten(model.generator);
    ParamVector d_flat = flatten(model.discriminator);
    AdamState g_adam = AdamState::zeros(g_flat.size());

    std::vector<std::size_t> order(trips.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double d_sum = 0.0, g_sum = 0.0;
        for (std::size_t item = 0; item < order.size(); ++item) {
            const Trip& real = trips[order[item]];
            const DrivingStyle style = *real.label;
            for (int r = 0; r < config.d_rounds; ++r) {
                const Matrix fake = generate(model.generator, sample_noise(rng, config.seq_len, config.latent), style);
                DiscriminatorGradient dg =
                    discriminator_gradient(model.discriminator, real.values, fake, style, config.smooth);
                if (!std::isfinite(dg.loss)) {
                    std::ostringstream msg;
                    msg << "train_rcgan: non-finite discriminator loss at epoch " << epoch << ", item " << item;
                    throw NumericalError(msg.str());
                }
                d_flat = sgd_update(d_flat, flatten(dg.grad), config.d_learning_rate);
                unflatten(d_flat, model.discriminator);
                d_sum += dg.loss / config.d_rounds;
            }
            for (int r = 0; r < config.g_rounds; ++r) {
                GeneratorGradient gg =
                    generator_gradient(model.generator, model.discriminator,
                                       sample_noise(rng, config.seq_len, config.latent), style,
                                       config.minimax_generator_loss);
                if (!std::isfinite(gg.loss)) {
                    std::ostringstream msg;
                    msg << "train_rcgan: non-finite generator loss at epoch " << epoch << ", item " << item;
                    throw NumericalError(msg.str());
                }
                const ParamVector grad = flatten(gg.grad);
                adam_step_inplace(g_flat.values, grad.values, g_adam, config.learning_rate);
                unflatten(g_flat, model.generator);
                g_sum += gg.loss / config.g_rounds;
            }
        }
        const double n = static_cast<double>(order.size());
        LossRecord record{epoch, d_sum / n, g_sum / n};
        model.history.push_back(record);
        if (on_epoch) on_epoch(record);
    }
    return model;
}

std::vector<Trip> synthesize(const GeneratorNet& gen, double ratio, int base_count, Rng& rng,
                             std::string_view id_prefix, Index length) {
    require(ratio > 0.0 && base_count > 0, "synthesize: ratio and base count must be positive");
    const double exact = ratio * base_count;
    const long count = std::lround(exact);
    require(std::abs(exact - static_cast<double>(count)) < 1e-9,
            "synthesize: ratio * base count must be integral, got " + std::to_string(exact));
    require(count % 2 == 0, "synthesize: trip count " + std::to_string(count) + " cannot be split evenly by class");

    std::vector<Trip> out;
    out.reserve(static_cast<std::size_t>(count));
    for (long k = 0; k < count; ++k) {
        const DrivingStyle style = (k % 2 == 0) ? DrivingStyle::normal : DrivingStyle::aggressive;
        Trip trip;
        std::ostringstream id;
        id << id_prefix << "_" << k;
        trip.id = id.str();
        trip.values = generate(gen, sample_noise(rng, length, gen.latent()), style);
        trip.label = style;
        out.push_back(std::move(trip));
    }
    return out;
}

} // namespace imugan
