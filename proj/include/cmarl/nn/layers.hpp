#pragma once

#include <random>
#include <string>

#include "cmarl/nn/graph.hpp"
#include "cmarl/nn/tensor.hpp"

namespace cmarl::nn {

enum class Activation { identity, tanh, relu, sigmoid };

inline Var activate(Graph& g, Var x, Activation act) {
    switch (act) {
    case Activation::identity: return x;
    case Activation::tanh: return g.tanh(x);
    case Activation::relu: return g.relu(x);
    case Activation::sigmoid: return g.sigmoid(x);
    }
    return x;
}

// y = act(x W + b), W stored as (in x out) so rows of x are samples.
struct Dense {
    Parameter weight;
    Parameter bias;

    Dense() = default;
    Dense(const std::string& name, Index in, Index out)
        : weight(name + ".weight", in, out), bias(name + ".bias", 1, out) {}

    Index in_width() const { return weight.value.rows(); }
    Index out_width() const { return weight.value.cols(); }

    void init(std::mt19937_64& rng) {
        init_uniform(weight, in_width(), rng);
        init_uniform(bias, in_width(), rng);
    }

    ParamSet params() { return {&weight, &bias}; }
};

inline Var dense_forward(Graph& g, Var input, Dense& layer, Activation act = Activation::identity) {
    if (g.value(input).cols() != layer.in_width())
        throw ConfigError("dense input width " + std::to_string(g.value(input).cols()) + " != layer width " +
                          std::to_string(layer.in_width()));
    Var w = g.param(layer.weight);
    Var b = g.param(layer.bias);
    return activate(g, g.add_row(g.matmul(input, w), b), act);
}

// Gated recurrent unit, gate layout [reset | update | candidate]:
//   r = s(x Wr + br + h Ur + cr)
//   z = s(x Wz + bz + h Uz + cz)
//   n = tanh(x Wn + bn + r * (h Un + cn))
//   h' = (1 - z) * n + z * h
struct GruCell {
    Parameter input_weight;   // in x 3H
    Parameter hidden_weight;  // H x 3H
    Parameter input_bias;     // 1 x 3H
    Parameter hidden_bias;    // 1 x 3H

    GruCell() = default;
    GruCell(const std::string& name, Index in, Index hidden)
        : input_weight(name + ".input_weight", in, 3 * hidden),
          hidden_weight(name + ".hidden_weight", hidden, 3 * hidden),
          input_bias(name + ".input_bias", 1, 3 * hidden),
          hidden_bias(name + ".hidden_bias", 1, 3 * hidden) {}

    Index in_width() const { return input_weight.value.rows(); }
    Index hidden_width() const { return hidden_weight.value.rows(); }

    void init(std::mt19937_64& rng) {
        Index h = hidden_width();
        init_uniform(input_weight, h, rng);
        init_uniform(hidden_weight, h, rng);
        init_uniform(input_bias, h, rng);
        init_uniform(hidden_bias, h, rng);
    }

    ParamSet params() { return {&input_weight, &hidden_weight, &input_bias, &hidden_bias}; }
};

// Input half of the GRU for many rows at once (x W + b). Lets callers project
// a whole unrolled sequence with one matmul and feed slices to gru_step_projected.
inline Var gru_project_input(Graph& g, Var input, GruCell& cell) {
    if (g.value(input).cols() != cell.in_width())
        throw ConfigError("gru input width " + std::to_string(g.value(input).cols()) + " != cell width " +
                          std::to_string(cell.in_width()));
    Var w = g.param(cell.input_weight);
    Var b = g.param(cell.input_bias);
    return g.add_row(g.matmul(input, w), b);
}

inline Var gru_step_projected(Graph& g, Var projected, Var hidden, GruCell& cell) {
    const Index h = cell.hidden_width();
    if (g.value(hidden).cols() != h)
        throw ConfigError("gru hidden width " + std::to_string(g.value(hidden).cols()) + " != " + std::to_string(h));
    if (g.value(projected).rows() != g.value(hidden).rows() || g.value(projected).cols() != 3 * h)
        throw ConfigError("gru projected input shape mismatch");
    Var uw = g.param(cell.hidden_weight);
    Var ub = g.param(cell.hidden_bias);
    Var gh = g.add_row(g.matmul(hidden, uw), ub);

    Var rz = g.sigmoid(g.add(g.slice_cols(projected, 0, 2 * h), g.slice_cols(gh, 0, 2 * h)));
    Var r = g.slice_cols(rz, 0, h);
    Var z = g.slice_cols(rz, h, h);
    Var n = g.tanh(g.add(g.slice_cols(projected, 2 * h, h), g.mul(r, g.slice_cols(gh, 2 * h, h))));
    return g.add(g.mul(g.one_minus(z), n), g.mul(z, hidden));
}

// Whole-sequence GRU as a single tape node. `projected` is (L*B) x 3H in
// time-major order (row t*B + b), h0 is B x H. Returns every hidden state,
// (L*B) x H in the same order. Backward is hand-written BPTT.
inline Var gru_unroll(Graph& g, Var projected, Var h0, GruCell& cell) {
    const Index H = cell.hidden_width();
    const Index B = g.value(h0).rows();
    if (g.value(h0).cols() != H || g.value(projected).cols() != 3 * H || B == 0 || g.value(projected).rows() % B != 0)
        throw ConfigError("gru_unroll shape mismatch");
    const Index L = g.value(projected).rows() / B;
    Var uw = g.param(cell.hidden_weight);
    Var ub = g.param(cell.hidden_bias);
    const Matrix& P = g.value(projected);
    const Matrix& W = g.value(uw);
    const Matrix& bias = g.value(ub);
    const Matrix& H0 = g.value(h0);

    Matrix out(L * B, H);
    Matrix R(L * B, H), Z(L * B, H), N(L * B, H), GN(L * B, H);
    Matrix gh(B, 3 * H);
    for (Index t = 0; t < L; ++t) {
        const Matrix& src = t == 0 ? H0 : static_cast<const Matrix&>(out);
        const auto hp = src.middleRows(t == 0 ? 0 : (t - 1) * B, B);
        gh.noalias() = hp * W;
        gh.rowwise() += bias.row(0);
        auto px = P.middleRows(t * B, B);
        auto r = R.middleRows(t * B, B);
        auto z = Z.middleRows(t * B, B);
        auto n = N.middleRows(t * B, B);
        r = (1.0 + (-(px.leftCols(H) + gh.leftCols(H)).array()).exp()).inverse().matrix();
        z = (1.0 + (-(px.middleCols(H, H) + gh.middleCols(H, H)).array()).exp()).inverse().matrix();
        GN.middleRows(t * B, B) = gh.rightCols(H);
        n = (px.rightCols(H).array() + r.array() * gh.rightCols(H).array()).tanh().matrix();
        out.middleRows(t * B, B) = ((1.0 - z.array()) * n.array() + z.array() * hp.array()).matrix();
    }
    const Var parents[] = {projected, h0, uw, ub};
    return g.custom(std::move(out), parents,
                    [=, R = std::move(R), Z = std::move(Z), N = std::move(N), GN = std::move(GN)](
                        Graph& gg, const Matrix& dout, const Matrix& hs) {
                        const Matrix& Wv = gg.value(uw);
                        const Matrix& H0v = gg.value(h0);
                        Matrix dP(L * B, 3 * H);
                        Matrix dW = Matrix::Zero(H, 3 * H);
                        Matrix db = Matrix::Zero(1, 3 * H);
                        Matrix dh = Matrix::Zero(B, H);
                        Matrix dgh(B, 3 * H);
                        for (Index t = L; t-- > 0;) {
                            dh += dout.middleRows(t * B, B);
                            const auto hp = t == 0 ? H0v.middleRows(0, B) : hs.middleRows((t - 1) * B, B);
                            auto r = R.middleRows(t * B, B).array();
                            auto z = Z.middleRows(t * B, B).array();
                            auto n = N.middleRows(t * B, B).array();
                            auto d = dP.middleRows(t * B, B);
                            d.rightCols(H) = (dh.array() * (1.0 - z) * (1.0 - n * n)).matrix();
                            d.middleCols(H, H) = (dh.array() * (hp.array() - n) * z * (1.0 - z)).matrix();
                            d.leftCols(H) =
                                (d.rightCols(H).array() * GN.middleRows(t * B, B).array() * r * (1.0 - r)).matrix();
                            dgh.leftCols(2 * H) = d.leftCols(2 * H);
                            dgh.rightCols(H) = (d.rightCols(H).array() * r).matrix();
                            dW.noalias() += hp.transpose() * dgh;
                            db += dgh.colwise().sum();
                            dh = (dh.array() * z).matrix();
                            dh.noalias() += dgh * Wv.transpose();
                        }
                        gg.accumulate(projected, dP);
                        gg.accumulate(h0, dh);
                        gg.accumulate(uw, dW);
                        gg.accumulate(ub, db);
                    });
}

inline Var gru_step(Graph& g, Var input, Var hidden, GruCell& cell) {
    return gru_step_projected(g, gru_project_input(g, input, cell), hidden, cell);
}

} // namespace cmarl::nn
