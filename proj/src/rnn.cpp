#include "imugan/rnn.hpp"

#include <cmath>
#include <string>

namespace imugan {

namespace {

void check_finite_column(const Matrix& m, Index t, const char* stage) {
    if (!m.col(t).allFinite())
        throw NumericalError(std::string(stage) + ": non-finite value at time step " + std::to_string(t));
}

} // namespace

// ---------------------------------------------------------------------------
// Vanilla RNN

RnnParams RnnParams::zeros(Index input_dim, Index hidden, Index output_dim) {
    return RnnParams{Matrix::Zero(hidden, input_dim), Matrix::Zero(hidden, hidden), Vector::Zero(hidden),
                     Matrix::Zero(output_dim, hidden), Vector::Zero(output_dim)};
}

RnnParams RnnParams::random(Index input_dim, Index hidden, Index output_dim, Rng& rng, double limit) {
    RnnParams p = zeros(input_dim, hidden, output_dim);
    p.for_each_param([&](std::string_view, auto& m) { fill_uniform(m, rng, limit); });
    return p;
}

Vector rnn_step(const RnnParams& params, const Vector& x, const Vector& h_prev) {
    require(x.size() == params.input_dim() && h_prev.size() == params.hidden(), "rnn_step: dimension mismatch");
    return (params.w * x + params.u * h_prev + params.b).array().tanh().matrix();
}

Vector rnn_output(const RnnParams& params, const Vector& h) {
    return softmax(affine(params.w_out, h, params.b_out));
}

Matrix rnn_unroll(const RnnParams& params, const Matrix& inputs) {
    require(inputs.cols() >= 1, "rnn_unroll: empty sequence");
    require(inputs.rows() == params.input_dim(), "rnn_unroll: input dimension mismatch");
    Matrix hidden(params.hidden(), inputs.cols());
    Vector h = Vector::Zero(params.hidden());
    for (Index t = 0; t < inputs.cols(); ++t) {
        h = rnn_step(params, inputs.col(t), h);
        hidden.col(t) = h;
        check_finite_column(hidden, t, "rnn_unroll");
    }
    return hidden;
}

RnnLoss rnn_cross_entropy(const RnnParams& params, const Matrix& inputs, const std::vector<int>& targets) {
    const Index length = inputs.cols();
    require(static_cast<Index>(targets.size()) == length, "rnn_cross_entropy: one target per step required");
    const Matrix hidden = rnn_unroll(params, inputs);

    RnnLoss out{0.0, RnnParams::zeros(params.input_dim(), params.hidden(), params.output_dim())};
    Matrix d_pre(params.hidden(), length);
    Vector dh_next = Vector::Zero(params.hidden());
    for (Index t = length - 1; t >= 0; --t) {
        const int target = targets[static_cast<std::size_t>(t)];
        require(target >= 0 && target < params.output_dim(), "rnn_cross_entropy: target out of range");
        const Vector p = rnn_output(params, hidden.col(t));
        out.loss -= std::log(p[target]);
        Vector d_logits = p;
        d_logits[target] -= 1.0;
        out.grad.w_out.noalias() += d_logits * hidden.col(t).transpose();
        out.grad.b_out += d_logits;
        const Vector dh = params.w_out.transpose() * d_logits + dh_next;
        d_pre.col(t) = dh.array() * (1.0 - hidden.col(t).array().square());
        check_finite_column(d_pre, t, "rnn_cross_entropy");
        dh_next.noalias() = params.u.transpose() * d_pre.col(t);
    }
    for (Index t = 0; t < length; ++t) {
        out.grad.w.noalias() += d_pre.col(t) * inputs.col(t).transpose();
        if (t > 0) out.grad.u.noalias() += d_pre.col(t) * hidden.col(t - 1).transpose();
        out.grad.b += d_pre.col(t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Peephole LSTM

LstmParams LstmParams::zeros(Index input_dim, Index hidden) {
    return LstmParams{Matrix::Zero(4 * hidden, input_dim), Matrix::Zero(4 * hidden, hidden),
                      Vector::Zero(3 * hidden), Vector::Zero(4 * hidden)};
}

LstmParams LstmParams::random(Index input_dim, Index hidden, Rng& rng, double limit) {
    LstmParams p = zeros(input_dim, hidden);
    p.for_each_param([&](std::string_view, auto& m) { fill_uniform(m, rng, limit); });
    return p;
}

LstmState LstmState::zeros(Index hidden) {
    return LstmState{Vector::Zero(hidden), Vector::Zero(hidden)};
}

namespace {

// Applies the gate nonlinearities to stacked pre-activations `z` (4H) given
// c_{t-1}, writing post-activations into `gates` and returning c_t.
// tanh(x) = 1 - 2 / (1 + e^{2x}); vectorizes through Eigen's packet exp.
template <class Derived>
auto tanh_via_exp(const Eigen::ArrayBase<Derived>& x) {
    return 1.0 - 2.0 / (1.0 + (2.0 * x).exp());
}

void lstm_cell(const LstmParams& params, Eigen::Ref<Vector> z, const Vector& c_prev, Eigen::Ref<Vector> gates,
               Eigen::Ref<Vector> c, Eigen::Ref<Vector> h) {
    const Index hdim = params.hidden();
    const auto cp = c_prev.array();
    for (Index g = 0; g < 3; ++g)
        gates.segment(g * hdim, hdim).array() =
            z.segment(g * hdim, hdim).array() + params.peephole.segment(g * hdim, hdim).array() * cp;
    gates.head(3 * hdim).array() = 1.0 / (1.0 + (-gates.head(3 * hdim).array()).exp());
    gates.tail(hdim).array() = tanh_via_exp(z.tail(hdim).array());
    c.array() = gates.segment(hdim, hdim).array() * cp + gates.head(hdim).array() * gates.tail(hdim).array();
    h.array() = gates.segment(2 * hdim, hdim).array() * tanh_via_exp(c.array());
}

} // namespace

LstmState lstm_step(const LstmParams& params, const Vector& x, const LstmState& prev) {
    require(x.size() == params.input_dim() && prev.h.size() == params.hidden() && prev.c.size() == params.hidden(),
            "lstm_step: dimension mismatch");
    Vector z = params.w * x + params.u * prev.h + params.b;
    Vector gates(4 * params.hidden());
    LstmState next = LstmState::zeros(params.hidden());
    lstm_cell(params, z, prev.c, gates, next.c, next.h);
    return next;
}

LstmTrace lstm_unroll(const LstmParams& params, const Matrix& inputs) {
    require(inputs.cols() >= 1, "lstm_unroll: empty sequence");
    require(inputs.rows() == params.input_dim(), "lstm_unroll: input dimension mismatch (expected " +
                                                     std::to_string(params.input_dim()) + ", got " +
                                                     std::to_string(inputs.rows()) + ")");
    const Index hdim = params.hidden();
    const Index length = inputs.cols();
    LstmTrace trace{inputs, Matrix(4 * hdim, length), Matrix(hdim, length), Matrix(hdim, length)};

    Matrix pre(4 * hdim, length);
    pre.noalias() = params.w * inputs;
    pre.colwise() += params.b;

    Vector h = Vector::Zero(hdim);
    Vector c = Vector::Zero(hdim);
    Vector z(4 * hdim);
    for (Index t = 0; t < length; ++t) {
        z = pre.col(t);
        if (t > 0) z.noalias() += params.u * h;
        lstm_cell(params, z, c, trace.gates.col(t), trace.cells.col(t), trace.hidden.col(t));
        check_finite_column(trace.hidden, t, "lstm_unroll");
        h = trace.hidden.col(t);
        c = trace.cells.col(t);
    }
    return trace;
}

LstmGradient lstm_backward(const LstmParams& params, const LstmTrace& trace, const Matrix& d_hidden,
                           bool param_gradients) {
    const Index hdim = params.hidden();
    const Index length = trace.length();
    require(d_hidden.rows() == hdim && d_hidden.cols() == length, "lstm_backward: d_hidden shape mismatch");

    LstmGradient out{LstmParams::zeros(params.input_dim(), hdim), Matrix()};
    Matrix d_pre(4 * hdim, length);
    Vector dh_rec = Vector::Zero(hdim);
    Vector dc_rec = Vector::Zero(hdim);

    const auto vi = params.v_gate(Gate::input);
    const auto vf = params.v_gate(Gate::forget);
    const auto vo = params.v_gate(Gate::output);

    Eigen::ArrayXd c_prev(hdim), tc(hdim), dh(hdim), dc(hdim), dai(hdim), daf(hdim), dao(hdim), dag(hdim);
    for (Index t = length - 1; t >= 0; --t) {
        const auto gates = trace.gates.col(t).array();
        const auto i = gates.segment(0, hdim);
        const auto f = gates.segment(hdim, hdim);
        const auto o = gates.segment(2 * hdim, hdim);
        const auto g = gates.segment(3 * hdim, hdim);
        if (t > 0) c_prev = trace.cells.col(t - 1).array();
        else c_prev.setZero();
        tc = tanh_via_exp(trace.cells.col(t).array());

        dh = d_hidden.col(t).array() + dh_rec.array();
        dao = dh * tc * o * (1.0 - o);
        dc = dc_rec.array() + dh * o * (1.0 - tc * tc);
        dai = dc * g * i * (1.0 - i);
        dag = dc * i * (1.0 - g * g);
        daf = dc * c_prev * f * (1.0 - f);

        auto dz = d_pre.col(t);
        dz.segment(0, hdim) = dai.matrix();
        dz.segment(hdim, hdim) = daf.matrix();
        dz.segment(2 * hdim, hdim) = dao.matrix();
        dz.segment(3 * hdim, hdim) = dag.matrix();

        dc_rec.array() = dc * f + vi.array() * dai + vf.array() * daf + vo.array() * dao;
        if (param_gradients) {
            out.params.peephole.segment(0, hdim).array() += dai * c_prev;
            out.params.peephole.segment(hdim, hdim).array() += daf * c_prev;
            out.params.peephole.segment(2 * hdim, hdim).array() += dao * c_prev;
        }

        if (!dz.allFinite() || !dc_rec.allFinite())
            throw NumericalError("lstm_backward: non-finite gradient at time step " + std::to_string(t));
        dh_rec.noalias() = params.u.transpose() * dz;
    }

    out.inputs.noalias() = params.w.transpose() * d_pre;
    if (!param_gradients) return out;
    out.params.w.noalias() = d_pre * trace.inputs.transpose();
    if (length > 1)
        out.params.u.noalias() = d_pre.rightCols(length - 1) * trace.hidden.leftCols(length - 1).transpose();
    out.params.b = d_pre.rowwise().sum();
    return out;
}

} // namespace imugan
