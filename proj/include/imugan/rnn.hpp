#pragma once

// Recurrent cells: a vanilla tanh RNN with a softmax read-out and a peephole
// LSTM. Sequences are stored column-wise (dim x length): column t is x_t.
// All backward passes are full (untruncated) backpropagation through time.

#include "imugan/numerics.hpp"

#include <string_view>

namespace imugan {

// ---------------------------------------------------------------------------
// Vanilla RNN

struct RnnParams {
    Matrix w;     // H x d_in
    Matrix u;     // H x H
    Vector b;     // H
    Matrix w_out; // d_out x H
    Vector b_out; // d_out

    static RnnParams zeros(Index input_dim, Index hidden, Index output_dim);
    static RnnParams random(Index input_dim, Index hidden, Index output_dim, Rng& rng, double limit = 0.08);

    Index input_dim() const { return w.cols(); }
    Index hidden() const { return w.rows(); }
    Index output_dim() const { return w_out.rows(); }

    template <class F>
    void for_each_param(F&& f) {
        f("W", w), f("U", u), f("b", b), f("W_p", w_out), f("b_p", b_out);
    }
    template <class F>
    void for_each_param(F&& f) const {
        f("W", w), f("U", u), f("b", b), f("W_p", w_out), f("b_p", b_out);
    }
};

/// h_t = tanh(W x_t + U h_{t-1} + b)
Vector rnn_step(const RnnParams& params, const Vector& x, const Vector& h_prev);

/// p_t = softmax(W_p h_t + b_p)
Vector rnn_output(const RnnParams& params, const Vector& h);

/// Hidden states h_1..h_L from h_0 = 0, as an H x L matrix.
Matrix rnn_unroll(const RnnParams& params, const Matrix& inputs);

struct RnnLoss {
    double loss = 0.0;
    RnnParams grad;
};

/// Summed per-step cross-entropy -log p_t[target_t] and its BPTT gradient.
RnnLoss rnn_cross_entropy(const RnnParams& params, const Matrix& inputs, const std::vector<int>& targets);

// ---------------------------------------------------------------------------
// Peephole LSTM

enum class Gate : int { input = 0, forget = 1, output = 2, cell = 3 };

/// Gate weights are stacked in blocks of H rows, ordered input, forget, output,
/// cell candidate. Peepholes are diagonal, stored as one length-3H vector
/// (input, forget, output).
struct LstmParams {
    Matrix w;        // 4H x d_in
    Matrix u;        // 4H x H
    Vector peephole; // 3H
    Vector b;        // 4H

    static LstmParams zeros(Index input_dim, Index hidden);
    static LstmParams random(Index input_dim, Index hidden, Rng& rng, double limit = 0.08);

    Index input_dim() const { return w.cols(); }
    Index hidden() const { return u.cols(); }

    auto w_gate(Gate g) { return w.middleRows(static_cast<Index>(g) * hidden(), hidden()); }
    auto w_gate(Gate g) const { return w.middleRows(static_cast<Index>(g) * hidden(), hidden()); }
    auto u_gate(Gate g) { return u.middleRows(static_cast<Index>(g) * hidden(), hidden()); }
    auto u_gate(Gate g) const { return u.middleRows(static_cast<Index>(g) * hidden(), hidden()); }
    auto b_gate(Gate g) { return b.segment(static_cast<Index>(g) * hidden(), hidden()); }
    auto b_gate(Gate g) const { return b.segment(static_cast<Index>(g) * hidden(), hidden()); }
    /// Only input, forget and output gates have peepholes.
    auto v_gate(Gate g) { return peephole.segment(static_cast<Index>(g) * hidden(), hidden()); }
    auto v_gate(Gate g) const { return peephole.segment(static_cast<Index>(g) * hidden(), hidden()); }

    template <class F>
    void for_each_param(F&& f) {
        f("W", w), f("U", u), f("V", peephole), f("b", b);
    }
    template <class F>
    void for_each_param(F&& f) const {
        f("W", w), f("U", u), f("V", peephole), f("b", b);
    }
};

struct LstmState {
    Vector h;
    Vector c;

    static LstmState zeros(Index hidden);
};

LstmState lstm_step(const LstmParams& params, const Vector& x, const LstmState& prev);

/// Everything the backward pass needs from a forward unroll.
struct LstmTrace {
    Matrix inputs; // d_in x L
    Matrix gates;  // 4H x L, post-activation (i, f, o, tanh candidate)
    Matrix cells;  // H x L, c_1..c_L
    Matrix hidden; // H x L, h_1..h_L

    Index length() const { return inputs.cols(); }
};

/// Runs the cell over all columns of `inputs` from the zero state.
LstmTrace lstm_unroll(const LstmParams& params, const Matrix& inputs);

struct LstmGradient {
    LstmParams params;
    Matrix inputs; // d_in x L
};

/// BPTT given dLoss/dh_t for every step (H x L). Throws NumericalError naming
/// the time step if a non-finite value appears. With `param_gradients` false
/// only the input gradient is computed (parameter gradients are left zero).
LstmGradient lstm_backward(const LstmParams& params, const LstmTrace& trace, const Matrix& d_hidden,
                           bool param_gradients = true);

} // namespace imugan
