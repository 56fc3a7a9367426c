#pragma once

// Dense numerical core shared by every network in the library: vector/matrix
// aliases, activations, optimizers and a finite-difference gradient oracle.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace imugan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

/// Raised when a caller breaks a documented precondition (shapes, counts,
/// label balance, ...).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation produces non-finite values or otherwise cannot
/// proceed on valid inputs.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& message);

enum class Activation { sigmoid, tanh, rectifier, maxout };

std::string_view to_string(Activation kind);
Activation activation_from_string(std::string_view name);

double sigmoid(double z);

Vector affine(const Matrix& w, const Vector& x, const Vector& b);

/// Element-wise activation. maxout takes the max over consecutive pairs and
/// returns a vector of half the input length.
Vector activate(Activation kind, const Vector& z);

/// Numerically stable softmax (max-subtracted).
Vector softmax(const Vector& z);

// ---------------------------------------------------------------------------
// Flat parameter views

struct ParamSlot {
    std::string name;
    Index rows = 0;
    Index cols = 0;
    Index offset = 0;

    bool operator==(const ParamSlot&) const = default;
};

class ParamLayout {
public:
    void add(std::string_view name, Index rows, Index cols);
    const std::vector<ParamSlot>& slots() const { return slots_; }
    Index size() const { return size_; }

    bool operator==(const ParamLayout&) const = default;

private:
    std::vector<ParamSlot> slots_;
    Index size_ = 0;
};

struct ParamVector {
    std::shared_ptr<const ParamLayout> layout;
    Vector values;

    Index size() const { return values.size(); }
    bool same_layout(const ParamVector& other) const;
};

/// Copies every named matrix of `net` (visited through `for_each_param`) into a
/// single flat vector.
template <class Net>
ParamVector flatten(const Net& net) {
    auto layout = std::make_shared<ParamLayout>();
    net.for_each_param([&](std::string_view name, const auto& m) { layout->add(name, m.rows(), m.cols()); });
    ParamVector out{layout, Vector(layout->size())};
    Index offset = 0;
    net.for_each_param([&](std::string_view, const auto& m) {
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i < m.rows(); ++i) out.values[offset++] = m(i, j);
    });
    return out;
}

/// Writes `flat` back into `net`, whose matrices must already have the shapes
/// recorded in the layout.
template <class Net>
void unflatten(const ParamVector& flat, Net& net) {
    require(flat.layout != nullptr, "unflatten: missing layout");
    const auto& slots = flat.layout->slots();
    std::size_t k = 0;
    net.for_each_param([&](std::string_view name, auto& m) {
        require(k < slots.size() && slots[k].name == name && slots[k].rows == m.rows() && slots[k].cols == m.cols(),
                "unflatten: layout mismatch at '" + std::string(name) + "'");
        Index offset = slots[k].offset;
        for (Index j = 0; j < m.cols(); ++j)
            for (Index i = 0; i < m.rows(); ++i) m(i, j) = flat.values[offset++];
        ++k;
    });
    require(k == slots.size(), "unflatten: layout has extra slots");
}

// ---------------------------------------------------------------------------
// Optimizers

struct AdamState {
    std::int64_t step = 0;
    Vector m;
    Vector v;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState zeros(Index size);
};

ParamVector sgd_update(const ParamVector& theta, const ParamVector& grad, double lr);

struct AdamStep {
    ParamVector theta;
    AdamState state;
};

AdamStep adam_update(const ParamVector& theta, const ParamVector& grad, const AdamState& state, double lr);

/// In-place ADAM on a raw vector; same arithmetic as adam_update. Used by the
/// inner training loops to avoid reallocating per step.
void adam_step_inplace(Vector& theta, const Vector& grad, AdamState& state, double lr);

// ---------------------------------------------------------------------------
// Finite differences

using ScalarFunction = std::function<double(const ParamVector&)>;

/// Central differences per coordinate.
ParamVector numeric_gradient(const ScalarFunction& f, const ParamVector& theta, double h = 1e-5);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor). `floor` keeps coordinates whose
/// true gradient is ~0 from dominating through round-off.
double max_relative_error(const Vector& a, const Vector& b, double floor = 1e-6);

// ---------------------------------------------------------------------------
// Seeding

/// SplitMix64 mix of a base seed with a stream tag; used to derive independent,
/// reproducible sub-seeds (per trip, per run, per grid cell ...).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

void fill_uniform(Matrix& m, Rng& rng, double limit);
void fill_uniform(Vector& v, Rng& rng, double limit);

} // namespace imugan
