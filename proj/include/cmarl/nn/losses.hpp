#pragma once

#include <cmath>
#include <random>

#include "cmarl/nn/graph.hpp"

namespace cmarl::nn {

// sum(mask * (pred - target)^2) / sum(mask); 0 when the mask is empty.
inline Var mse_masked(Graph& g, Var pred, const Matrix& target, const Matrix& mask) {
    const Matrix& p = g.value(pred);
    if (p.rows() != target.rows() || p.cols() != target.cols() || p.rows() != mask.rows() || p.cols() != mask.cols())
        throw ConfigError("mse_masked shape mismatch");
    double total = mask.sum();
    Var diff = g.sub(pred, g.input(target));
    Var weighted = g.mul(g.mul(diff, diff), g.input(mask));
    return g.scale(g.sum(weighted), total > 0.0 ? 1.0 / total : 0.0);
}

inline Matrix sample_gumbel(Index rows, Index cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix noise(rows, cols);
    for (Index i = 0; i < noise.size(); ++i) {
        double x = u(rng);
        noise.data()[i] = -std::log(-std::log(x + 1e-20) + 1e-20);
    }
    return noise;
}

// Concrete relaxation of a categorical per row: softmax((logits + noise) / temperature).
// With hard=true the forward value is the exact one-hot argmax and the
// gradient flows through the soft sample.
inline Var gumbel_softmax_with_noise(Graph& g, Var logits, const Matrix& noise, double temperature, bool hard) {
    if (!(temperature > 0.0)) throw ConfigError("gumbel-softmax temperature must be positive");
    const Matrix& l = g.value(logits);
    if (noise.rows() != l.rows() || noise.cols() != l.cols()) throw ConfigError("gumbel noise shape mismatch");
    Var soft = g.softmax_rows(g.scale(g.add(logits, g.input(noise)), 1.0 / temperature));
    if (!hard) return soft;
    const Matrix& y = g.value(soft);
    Matrix onehot = Matrix::Zero(y.rows(), y.cols());
    for (Index r = 0; r < y.rows(); ++r) {
        Index best = 0;
        for (Index c = 1; c < y.cols(); ++c)
            if (y(r, c) > y(r, best)) best = c;
        onehot(r, best) = 1.0;
    }
    return g.straight_through(soft, std::move(onehot));
}

inline Var gumbel_softmax_sample(Graph& g, Var logits, double temperature, bool hard, std::mt19937_64& rng) {
    if (!(temperature > 0.0)) throw ConfigError("gumbel-softmax temperature must be positive");
    const Matrix& l = g.value(logits);
    return gumbel_softmax_with_noise(g, logits, sample_gumbel(l.rows(), l.cols(), rng), temperature, hard);
}

} // namespace cmarl::nn
