#include "imugan/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace imugan {

void require(bool condition, const std::string& message) {
    if (!condition) throw ContractViolation(message);
}

std::string_view to_string(Activation kind) {
    switch (kind) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::rectifier: return "rectifier";
    case Activation::maxout: return "maxout";
    }
    return "unknown";
}

Activation activation_from_string(std::string_view name) {
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "tanh") return Activation::tanh;
    if (name == "rectifier" || name == "relu") return Activation::rectifier;
    if (name == "maxout") return Activation::maxout;
    throw ContractViolation("unknown activation '" + std::string(name) + "'");
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Vector affine(const Matrix& w, const Vector& x, const Vector& b) {
    if (w.cols() != x.size() || w.rows() != b.size()) {
        std::ostringstream msg;
        msg << "affine: W is " << w.rows() << "x" << w.cols() << ", x has " << x.size() << ", b has " << b.size();
        throw ContractViolation(msg.str());
    }
    Vector out = b;
    for (Index i = 0; i < w.rows(); ++i) {
        double acc = 0.0;
        for (Index j = 0; j < w.cols(); ++j) acc += w(i, j) * x[j];
        out[i] += acc;
    }
    return out;
}

Vector activate(Activation kind, const Vector& z) {
    switch (kind) {
    case Activation::sigmoid: return z.unaryExpr([](double v) { return sigmoid(v); });
    case Activation::tanh: return z.array().tanh().matrix();
    case Activation::rectifier: return z.cwiseMax(0.0);
    case Activation::maxout: {
        require(z.size() % 2 == 0, "maxout: input length must be even, got " + std::to_string(z.size()));
        Vector out(z.size() / 2);
        for (Index k = 0; k < out.size(); ++k) out[k] = std::max(z[2 * k], z[2 * k + 1]);
        return out;
    }
    }
    throw ContractViolation("activate: unknown kind");
}

Vector softmax(const Vector& z) {
    require(z.size() > 0, "softmax: empty input");
    const double peak = z.maxCoeff();
    Vector e = (z.array() - peak).exp().matrix();
    return e / e.sum();
}

void ParamLayout::add(std::string_view name, Index rows, Index cols) {
    slots_.push_back(ParamSlot{std::string(name), rows, cols, size_});
    size_ += rows * cols;
}

bool ParamVector::same_layout(const ParamVector& other) const {
    if (layout == other.layout) return true;
    if (!layout || !other.layout) return false;
    return *layout == *other.layout;
}

AdamState AdamState::zeros(Index size) {
    AdamState s;
    s.m = Vector::Zero(size);
    s.v = Vector::Zero(size);
    return s;
}

ParamVector sgd_update(const ParamVector& theta, const ParamVector& grad, double lr) {
    require(theta.same_layout(grad) && theta.size() == grad.size(), "sgd_update: layout mismatch");
    ParamVector out{theta.layout, theta.values - lr * grad.values};
    return out;
}

void adam_step_inplace(Vector& theta, const Vector& grad, AdamState& state, double lr) {
    require(theta.size() == grad.size() && state.m.size() == theta.size() && state.v.size() == theta.size(),
            "adam_update: layout mismatch");
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (Index i = 0; i < theta.size(); ++i) {
        const double g = grad[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        theta[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

AdamStep adam_update(const ParamVector& theta, const ParamVector& grad, const AdamState& state, double lr) {
    require(theta.same_layout(grad), "adam_update: layout mismatch");
    AdamStep out{theta, state};
    adam_step_inplace(out.theta.values, grad.values, out.state, lr);
    return out;
}

ParamVector numeric_gradient(const ScalarFunction& f, const ParamVector& theta, double h) {
    require(h > 0.0, "numeric_gradient: step must be positive");
    ParamVector grad{theta.layout, Vector::Zero(theta.size())};
    ParamVector probe = theta;
    for (Index i = 0; i < theta.size(); ++i) {
        const double original = probe.values[i];
        probe.values[i] = original + h;
        const double up = f(probe);
        probe.values[i] = original - h;
        const double down = f(probe);
        probe.values[i] = original;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericalError("numeric_gradient: non-finite evaluation at coordinate " + std::to_string(i));
        grad.values[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double max_relative_error(const Vector& a, const Vector& b, double floor) {
    require(a.size() == b.size(), "max_relative_error: size mismatch");
    double worst = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    // FNV-1a over the tag, then mixed with the base.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : tag) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return derive_seed(base, h);
}

void fill_uniform(Matrix& m, Rng& rng, double limit) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
}

void fill_uniform(Vector& v, Rng& rng, double limit) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
}

} // namespace imugan
