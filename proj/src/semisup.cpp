#include "imugan/semisup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

namespace imugan {

namespace {

constexpr double kInitLimit = 0.08;

Matrix dense_forward(const DenseLayer& layer, const Matrix& a) {
    Matrix z(layer.out(), a.cols());
    z.noalias() = layer.w * a;
    z.colwise() += layer.b;
    return z;
}

Matrix apply_hidden(Activation kind, const Matrix& z) {
    switch (kind) {
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::sigmoid: return z.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::rectifier: return z.cwiseMax(0.0);
    case Activation::maxout: {
        require(z.rows() % 2 == 0, "maxout: layer width must be even");
        Matrix a(z.rows(), z.cols());
        for (Index j = 0; j < z.cols(); ++j)
            for (Index k = 0; k < z.rows(); k += 2) a(k, j) = a(k + 1, j) = std::max(z(k, j), z(k + 1, j));
        return a;
    }
    }
    throw ContractViolation("unknown activation");
}

Matrix hidden_backward(Activation kind, const Matrix& z, const Matrix& a, const Matrix& da) {
    switch (kind) {
    case Activation::tanh: return (da.array() * (1.0 - a.array().square())).matrix();
    case Activation::sigmoid: return (da.array() * a.array() * (1.0 - a.array())).matrix();
    case Activation::rectifier: return (da.array() * (z.array() > 0.0).cast<double>()).matrix();
    case Activation::maxout: {
        Matrix dz = Matrix::Zero(z.rows(), z.cols());
        for (Index j = 0; j < z.cols(); ++j)
            for (Index k = 0; k < z.rows(); k += 2) {
                const double shared = da(k, j) + da(k + 1, j);
                if (z(k, j) >= z(k + 1, j))
                    dz(k, j) = shared;
                else
                    dz(k + 1, j) = shared;
            }
        return dz;
    }
    }
    throw ContractViolation("unknown activation");
}

void accumulate_layer_grad(DenseLayer& grad, const Matrix& dz, const Matrix& a_in) {
    grad.w.noalias() = dz * a_in.transpose();
    grad.b = dz.rowwise().sum();
}

struct AeForward {
    std::vector<Matrix> a; // a[0] = input columns, a[k + 1] = output of layer k
};

AeForward ae_forward(const AutoencoderParams& ae, const Matrix& data) {
    require(!ae.layers.empty(), "autoencoder: no layers");
    require(data.cols() == ae.layers.front().in(), "autoencoder: expected " +
                                                      std::to_string(ae.layers.front().in()) + " features, got " +
                                                      std::to_string(data.cols()));
    AeForward f;
    f.a.push_back(data.transpose());
    for (std::size_t k = 0; k < ae.layers.size(); ++k) {
        Matrix z = dense_forward(ae.layers[k], f.a.back());
        const bool last = k + 1 == ae.layers.size();
        f.a.push_back(last ? std::move(z) : apply_hidden(Activation::tanh, z));
    }
    return f;
}

struct ClassifierForward {
    std::vector<Matrix> z;
    std::vector<Matrix> a; // a[0] = input columns
    Matrix logits;         // 2 x n
};

ClassifierForward classifier_forward(const ClassifierParams& model, const Matrix& x) {
    require(!model.hidden.empty(), "classifier: no hidden layers");
    require(x.cols() == model.hidden.front().in(), "classifier: expected " +
                                                       std::to_string(model.hidden.front().in()) +
                                                       " features, got " + std::to_string(x.cols()));
    ClassifierForward f;
    f.a.push_back(x.transpose());
    for (const DenseLayer& layer : model.hidden) {
        f.z.push_back(dense_forward(layer, f.a.back()));
        f.a.push_back(apply_hidden(model.activation, f.z.back()));
    }
    f.logits = dense_forward(model.output, f.a.back());
    return f;
}

// Column-wise log-softmax.
Matrix log_softmax_cols(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (Index j = 0; j < logits.cols(); ++j) {
        const double peak = logits.col(j).maxCoeff();
        const double lse = peak + std::log((logits.col(j).array() - peak).exp().sum());
        out.col(j) = logits.col(j).array() - lse;
    }
    return out;
}

void check_labeled(const LabeledSet& data, Index features) {
    require(data.x.rows() == static_cast<Index>(data.y.size()), "labeled set: one label per row required");
    require(data.x.rows() > 0, "labeled set: empty");
    require(data.x.cols() == features, "labeled set: feature width mismatch");
    for (int label : data.y) require(label == 0 || label == 1, "labeled set: labels must be 0 or 1");
}

} // namespace

std::string AutoencoderParams::layer_name(std::size_t k, const char* part) {
    return "layer" + std::to_string(k) + "." + part;
}

std::vector<int> AutoencoderParams::dims() const {
    std::vector<int> d;
    if (layers.empty()) return d;
    d.push_back(static_cast<int>(layers.front().in()));
    for (const DenseLayer& l : layers) d.push_back(static_cast<int>(l.out()));
    return d;
}

AutoencoderParams init_autoencoder(std::span<const int> dims, Rng& rng) {
    require(dims.size() >= 3, "autoencoder: need at least one hidden layer");
    require(dims.front() == dims.back(), "autoencoder: output width must equal input width");
    AutoencoderParams ae;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        require(dims[k] > 0 && dims[k + 1] > 0, "autoencoder: layer widths must be positive");
        DenseLayer layer{Matrix(dims[k + 1], dims[k]), Vector(dims[k + 1])};
        fill_uniform(layer.w, rng, kInitLimit);
        fill_uniform(layer.b, rng, kInitLimit);
        ae.layers.push_back(std::move(layer));
    }
    return ae;
}

Matrix encode(const AutoencoderParams& ae, const Matrix& data) {
    const AeForward f = ae_forward(ae, data);
    return f.a[ae.layers.size() / 2].transpose();
}

Matrix reconstruct(const AutoencoderParams& ae, const Matrix& data) {
    return ae_forward(ae, data).a.back().transpose();
}

double reconstruction_loss(const AutoencoderParams& ae, const Matrix& data) {
    const AeForward f = ae_forward(ae, data);
    return (f.a.back() - f.a.front()).squaredNorm() / static_cast<double>(data.rows());
}

AutoencoderGradient reconstruction_gradient(const AutoencoderParams& ae, const Matrix& data) {
    require(data.rows() > 0, "autoencoder: empty data");
    const AeForward f = ae_forward(ae, data);
    const double n = static_cast<double>(data.rows());
    const Matrix residual = f.a.back() - f.a.front();

    AutoencoderGradient out{residual.squaredNorm() / n, AutoencoderParams{}};
    out.grad.layers.resize(ae.layers.size());
    Matrix dz = 2.0 * residual / n; // linear output layer
    for (std::size_t k = ae.layers.size(); k-- > 0;) {
        accumulate_layer_grad(out.grad.layers[k], dz, f.a[k]);
        if (k == 0) break;
        const Matrix da = ae.layers[k].w.transpose() * dz;
        dz = hidden_backward(Activation::tanh, Matrix(), f.a[k], da);
    }
    return out;
}

AutoencoderFit train_autoencoder(AutoencoderParams init, const Matrix& data, int epochs, double lr) {
    require(data.rows() > 0, "train_autoencoder: empty unlabeled set");
    require(epochs >= 0, "train_autoencoder: epochs must be non-negative");
    AutoencoderFit fit{std::move(init), {}};
    ParamVector flat = flatten(fit.params);
    AdamState adam = AdamState::zeros(flat.size());
    for (int epoch = 0; epoch < epochs; ++epoch) {
        AutoencoderGradient g = reconstruction_gradient(fit.params, data);
        if (!std::isfinite(g.loss))
            throw NumericalError("train_autoencoder: non-finite loss at epoch " + std::to_string(epoch));
        fit.loss_history.push_back(g.loss);
        adam_step_inplace(flat.values, flatten(g.grad).values, adam, lr);
        unflatten(flat, fit.params);
    }
    return fit;
}

AutoencoderFit train_autoencoder(const Matrix& data, int epochs, double lr, Rng& rng, std::span<const int> dims) {
    require(data.rows() > 0, "train_autoencoder: empty unlabeled set");
    return train_autoencoder(init_autoencoder(dims, rng), data, epochs, lr);
}

// ---------------------------------------------------------------------------

ClassifierParams transfer_weights(const AutoencoderParams& ae, Activation activation, Rng& rng) {
    require(ae.layers.size() >= 2, "transfer_weights: autoencoder needs a reconstruction layer");
    ClassifierParams model;
    model.activation = activation;
    model.hidden.assign(ae.layers.begin(), ae.layers.end() - 1);
    for (std::size_t k = 1; k < model.hidden.size(); ++k)
        require(model.hidden[k].in() == model.hidden[k - 1].out(), "transfer_weights: layer dimension mismatch");
    if (activation == Activation::maxout)
        for (const DenseLayer& l : model.hidden)
            require(l.out() % 2 == 0, "transfer_weights: maxout needs even layer widths");
    const Index width = model.hidden.back().out();
    model.output = DenseLayer{Matrix(2, width), Vector(2)};
    fill_uniform(model.output.w, rng, kInitLimit);
    fill_uniform(model.output.b, rng, kInitLimit);
    return model;
}

LabeledSet concat(const LabeledSet& a, const LabeledSet& b) {
    if (a.size() == 0) return b;
    if (b.size() == 0) return a;
    require(a.x.cols() == b.x.cols(), "concat: feature width mismatch");
    LabeledSet out{Matrix(a.x.rows() + b.x.rows(), a.x.cols()), a.y};
    out.x << a.x, b.x;
    out.y.insert(out.y.end(), b.y.begin(), b.y.end());
    return out;
}

Matrix hidden_activations(const ClassifierParams& model, const Matrix& x) {
    return classifier_forward(model, x).a.back().transpose();
}

Matrix predict_proba(const ClassifierParams& model, const Matrix& x) {
    const ClassifierForward f = classifier_forward(model, x);
    return log_softmax_cols(f.logits).array().exp().matrix().transpose();
}

Vector predict_scores(const ClassifierParams& model, const Matrix& x) {
    return predict_proba(model, x).col(1);
}

double predict(const ClassifierParams& model, const Vector& features) {
    return predict_scores(model, features.transpose())[0];
}

double cross_entropy(const ClassifierParams& model, const LabeledSet& data) {
    check_labeled(data, model.hidden.front().in());
    const Matrix logp = log_softmax_cols(classifier_forward(model, data.x).logits);
    double acc = 0.0;
    for (Index j = 0; j < logp.cols(); ++j) acc -= logp(data.y[static_cast<std::size_t>(j)], j);
    return acc / static_cast<double>(data.size());
}

ClassifierGradient cross_entropy_gradient(const ClassifierParams& model, const LabeledSet& data) {
    check_labeled(data, model.hidden.front().in());
    const ClassifierForward f = classifier_forward(model, data.x);
    const Matrix logp = log_softmax_cols(f.logits);
    const double n = static_cast<double>(data.size());

    ClassifierGradient out;
    out.grad.activation = model.activation;
    out.grad.hidden.resize(model.hidden.size());
    Matrix d_logits = logp.array().exp().matrix();
    for (Index j = 0; j < logp.cols(); ++j) {
        const int y = data.y[static_cast<std::size_t>(j)];
        out.loss -= logp(y, j);
        d_logits(y, j) -= 1.0;
    }
    out.loss /= n;
    d_logits /= n;

    accumulate_layer_grad(out.grad.output, d_logits, f.a.back());
    Matrix da = model.output.w.transpose() * d_logits;
    for (std::size_t k = model.hidden.size(); k-- > 0;) {
        const Matrix dz = hidden_backward(model.activation, f.z[k], f.a[k + 1], da);
        accumulate_layer_grad(out.grad.hidden[k], dz, f.a[k]);
        if (k > 0) da = model.hidden[k].w.transpose() * dz;
    }
    return out;
}

ClassifierParams train_classifier(ClassifierParams init, const LabeledSet& train, int epochs, double lr,
                                  const ClassifierCheckpoint& checkpoint) {
    require(epochs >= 0, "train_classifier: epochs must be non-negative");
    check_labeled(train, init.hidden.front().in());
    const auto positives = std::count(train.y.begin(), train.y.end(), 1);
    require(positives > 0 && positives < train.size(), "train_classifier: training set must contain both classes");

    ParamVector flat = flatten(init);
    AdamState adam = AdamState::zeros(flat.size());
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        ClassifierGradient g = cross_entropy_gradient(init, train);
        if (!std::isfinite(g.loss))
            throw NumericalError("train_classifier: non-finite loss at epoch " + std::to_string(epoch));
        adam_step_inplace(flat.values, flatten(g.grad).values, adam, lr);
        unflatten(flat, init);
        if (checkpoint) checkpoint(epoch, init);
    }
    return init;
}

// ---------------------------------------------------------------------------

RocResult auroc(std::span<const double> scores, std::span<const int> labels) {
    require(scores.size() == labels.size(), "auroc: one label per score required");
    std::int64_t positives = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        require(std::isfinite(scores[i]), "auroc: non-finite score at index " + std::to_string(i));
        positives += labels[i] != 0 ? 1 : 0;
    }
    const std::int64_t negatives = static_cast<std::int64_t>(scores.size()) - positives;
    require(positives > 0 && negatives > 0, "auroc: labels must contain both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult out;
    out.curve.push_back(RocPoint{std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::int64_t tp = 0, fp = 0, twice_wins = 0;
    for (std::size_t start = 0; start < order.size();) {
        std::size_t stop = start;
        std::int64_t tp_group = 0, fp_group = 0;
        while (stop < order.size() && scores[order[stop]] == scores[order[start]]) {
            (labels[order[stop]] != 0 ? tp_group : fp_group) += 1;
            ++stop;
        }
        const std::int64_t negatives_below = negatives - fp - fp_group;
        twice_wins += 2 * tp_group * negatives_below + tp_group * fp_group;
        tp += tp_group;
        fp += fp_group;
        out.curve.push_back(RocPoint{scores[order[start]], static_cast<double>(fp) / static_cast<double>(negatives),
                                     static_cast<double>(tp) / static_cast<double>(positives)});
        start = stop;
    }
    out.auc = static_cast<double>(twice_wins) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
    return out;
}

// ---------------------------------------------------------------------------

GridResult grid_search(const AutoencoderParams& ae, const LabeledSet& train, const LabeledSet& validation,
                       const GridSpec& grid, std::uint64_t seed) {
    require(train.size() > 0 && validation.size() > 0, "grid_search: train and validation sets must be nonempty");
    require(grid.size() > 0, "grid_search: empty grid");
    std::vector<int> epoch_list = grid.epochs;
    for (int e : epoch_list) require(e >= 0, "grid_search: epochs must be non-negative");
    const int max_epochs = *std::max_element(epoch_list.begin(), epoch_list.end());

    struct Cell {
        double auc = 0.0;
        ClassifierParams params;
    };
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, Cell> cells;

    for (std::size_t li = 0; li < grid.learning_rates.size(); ++li) {
        for (std::size_t ai = 0; ai < grid.activations.size(); ++ai) {
            Rng rng(derive_seed(seed, li * 1000 + ai));
            ClassifierParams init = transfer_weights(ae, grid.activations[ai], rng);
            auto record = [&](int epoch, const ClassifierParams& params) {
                for (std::size_t ei = 0; ei < epoch_list.size(); ++ei) {
                    if (epoch_list[ei] != epoch) continue;
                    const Vector scores = predict_scores(params, validation.x);
                    const double auc =
                        auroc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
                              validation.y)
                            .auc;
                    cells[{li, ei, ai}] = Cell{auc, params};
                }
            };
            record(0, init);
            train_classifier(std::move(init), train, max_epochs, grid.learning_rates[li], record);
        }
    }

    GridResult out;
    bool have_best = false;
    for (std::size_t li = 0; li < grid.learning_rates.size(); ++li)
        for (std::size_t ei = 0; ei < epoch_list.size(); ++ei)
            for (std::size_t ai = 0; ai < grid.activations.size(); ++ai) {
                const Cell& cell = cells.at({li, ei, ai});
                GridEntry entry{grid.learning_rates[li], epoch_list[ei], grid.activations[ai], cell.auc};
                out.table.push_back(entry);
                if (!have_best || entry.validation_auroc > out.best_entry.validation_auroc) {
                    out.best_entry = entry;
                    out.best = cell.params;
                    have_best = true;
                }
            }
    return out;
}

} // namespace imugan
