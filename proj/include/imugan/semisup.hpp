#pragma once

// Semi-supervised evaluator: an autoencoder pretrained on unlabeled feature
// vectors donates its three hidden layers to a softmax classifier, which is
// then fine-tuned on labeled data under a grid search scored by AUROC.

#include "imugan/numerics.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace imugan {

struct DenseLayer {
    Matrix w; // out x in
    Vector b; // out

    Index in() const { return w.cols(); }
    Index out() const { return w.rows(); }
};

/// Layer sizes [45, 100, 50, 100, 45]: tanh on every hidden layer, linear
/// reconstruction layer.
inline const std::vector<int> kAutoencoderDims = {45, 100, 50, 100, 45};

struct AutoencoderParams {
    std::vector<DenseLayer> layers;

    std::vector<int> dims() const;

    template <class F>
    void for_each_param(F&& f) {
        for (std::size_t k = 0; k < layers.size(); ++k) {
            f(layer_name(k, "W"), layers[k].w);
            f(layer_name(k, "b"), layers[k].b);
        }
    }
    template <class F>
    void for_each_param(F&& f) const {
        for (std::size_t k = 0; k < layers.size(); ++k) {
            f(layer_name(k, "W"), layers[k].w);
            f(layer_name(k, "b"), layers[k].b);
        }
    }

    static std::string layer_name(std::size_t k, const char* part);
};

AutoencoderParams init_autoencoder(std::span<const int> dims, Rng& rng);

/// Rows of `data` are samples. Returns the bottleneck activations (n x 50).
Matrix encode(const AutoencoderParams& ae, const Matrix& data);
Matrix reconstruct(const AutoencoderParams& ae, const Matrix& data);

/// (1/n) sum_i ||s_i - s'_i||^2
double reconstruction_loss(const AutoencoderParams& ae, const Matrix& data);

struct AutoencoderGradient {
    double loss = 0.0;
    AutoencoderParams grad;
};

AutoencoderGradient reconstruction_gradient(const AutoencoderParams& ae, const Matrix& data);

struct AutoencoderFit {
    AutoencoderParams params;
    std::vector<double> loss_history; // loss before each epoch's update
};

/// Full-batch ADAM on the reconstruction loss.
AutoencoderFit train_autoencoder(const Matrix& data, int epochs, double lr, Rng& rng,
                                 std::span<const int> dims = kAutoencoderDims);
/// Continues from given parameters (used by tests and reduced-width checks).
AutoencoderFit train_autoencoder(AutoencoderParams init, const Matrix& data, int epochs, double lr);

// ---------------------------------------------------------------------------
// Classifier

struct ClassifierParams {
    std::vector<DenseLayer> hidden;
    DenseLayer output; // 2 x last hidden width
    Activation activation = Activation::tanh;

    template <class F>
    void for_each_param(F&& f) {
        for (std::size_t k = 0; k < hidden.size(); ++k) {
            f(AutoencoderParams::layer_name(k, "W"), hidden[k].w);
            f(AutoencoderParams::layer_name(k, "b"), hidden[k].b);
        }
        f("output.W", output.w), f("output.b", output.b);
    }
    template <class F>
    void for_each_param(F&& f) const {
        for (std::size_t k = 0; k < hidden.size(); ++k) {
            f(AutoencoderParams::layer_name(k, "W"), hidden[k].w);
            f(AutoencoderParams::layer_name(k, "b"), hidden[k].b);
        }
        f("output.W", output.w), f("output.b", output.b);
    }
};

/// Copies every autoencoder layer except the reconstruction layer and attaches
/// a fresh 2-way output layer drawn uniformly from [-0.08, 0.08]. With maxout,
/// each consecutive unit pair shares the max of its two pre-activations, so a
/// layer of width w carries w / 2 distinct values.
ClassifierParams transfer_weights(const AutoencoderParams& ae, Activation activation, Rng& rng);

struct LabeledSet {
    Matrix x;            // n x features
    std::vector<int> y;  // 1 = aggressive (positive), 0 = normal

    Index size() const { return x.rows(); }
};

LabeledSet concat(const LabeledSet& a, const LabeledSet& b);

/// Activations after the last hidden layer (n x width).
Matrix hidden_activations(const ClassifierParams& model, const Matrix& x);

/// Probability of the aggressive class for one feature vector.
double predict(const ClassifierParams& model, const Vector& features);
/// Both class probabilities per row (n x 2).
Matrix predict_proba(const ClassifierParams& model, const Matrix& x);
/// Aggressive-class probability per row.
Vector predict_scores(const ClassifierParams& model, const Matrix& x);

double cross_entropy(const ClassifierParams& model, const LabeledSet& data);

struct ClassifierGradient {
    double loss = 0.0;
    ClassifierParams grad;
};

ClassifierGradient cross_entropy_gradient(const ClassifierParams& model, const LabeledSet& data);

/// Called after every completed epoch with (epoch number starting at 1, params).
using ClassifierCheckpoint = std::function<void(int, const ClassifierParams&)>;

/// Full-batch ADAM on mean cross-entropy. Deterministic; no randomness.
ClassifierParams train_classifier(ClassifierParams init, const LabeledSet& train, int epochs, double lr,
                                  const ClassifierCheckpoint& checkpoint = {});

// ---------------------------------------------------------------------------
// ROC / AUROC

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocResult {
    double auc = 0.0;
    std::vector<RocPoint> curve; // starts at (inf, 0, 0), ends at (min score, 1, 1)
};

/// Mann-Whitney AUROC (ties count 1/2) with the ROC curve over all distinct
/// thresholds. Labels: nonzero = positive.
RocResult auroc(std::span<const double> scores, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Grid search

struct GridSpec {
    std::vector<double> learning_rates = {0.001, 0.01, 0.1};
    std::vector<int> epochs = {100, 200, 500};
    std::vector<Activation> activations = {Activation::tanh, Activation::maxout, Activation::rectifier};

    std::size_t size() const { return learning_rates.size() * epochs.size() * activations.size(); }
};

struct GridEntry {
    double learning_rate = 0.0;
    int epochs = 0;
    Activation activation = Activation::tanh;
    double validation_auroc = 0.0;
};

struct GridResult {
    ClassifierParams best;
    GridEntry best_entry;
    std::vector<GridEntry> table; // ordered by learning rate, then epochs, then activation
};

/// Trains every grid configuration from the transferred autoencoder weights and
/// keeps the one with the highest validation AUROC. Ties go to the earliest
/// table entry (smaller learning rate, then fewer epochs, then activation order).
/// Configurations sharing a learning rate and activation share one output-layer
/// draw, so their epoch counts are prefixes of the same training run.
GridResult grid_search(const AutoencoderParams& ae, const LabeledSet& train, const LabeledSet& validation,
                       const GridSpec& grid, std::uint64_t seed);

} // namespace imugan
