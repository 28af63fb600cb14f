#pragma once

#include <cmath>
#include <vector>

#include "cmarl/nn/tensor.hpp"

namespace cmarl::nn {

struct RmspropConfig {
    double learning_rate = 5e-4;
    double decay = 0.99;
    double epsilon = 1e-5;
};

// Running average of squared gradients, one slot per parameter in ParamSet order.
struct RmspropState {
    RmspropConfig config;
    std::vector<Matrix> square_avg;

    RmspropState() = default;
    explicit RmspropState(RmspropConfig c) : config(c) {}
};

// v <- decay*v + (1-decay)*g^2;  p <- p - lr*g/(sqrt(v)+eps); then zero grads.
inline void rmsprop_update(const ParamSet& params, RmspropState& state) {
    if (state.square_avg.empty()) {
        state.square_avg.reserve(params.size());
        for (auto* p : params) state.square_avg.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
    if (state.square_avg.size() != params.size()) throw ConfigError("optimizer state does not match parameter set");
    const auto& c = state.config;
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = params[i];
        Matrix& v = state.square_avg[i];
        v = c.decay * v + (1.0 - c.decay) * p.grad.cwiseProduct(p.grad);
        p.value.array() -= c.learning_rate * p.grad.array() / (v.array().sqrt() + c.epsilon);
        p.zero_grad();
    }
}

} // namespace cmarl::nn
