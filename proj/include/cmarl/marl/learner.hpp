#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cmarl/envs/world.hpp"
#include "cmarl/error.hpp"
#include "cmarl/marl/replay.hpp"
#include "cmarl/marl/schedule.hpp"
#include "cmarl/nn/layers.hpp"
#include "cmarl/nn/losses.hpp"
#include "cmarl/nn/rmsprop.hpp"

namespace cmarl::marl {

using nn::Graph;
using nn::Index;
using nn::Matrix;
using nn::Var;

// Recurrent Q-network: GRU over [observation | previous action one-hot],
// dense head to one Q-value per action.
struct QNetwork {
    nn::GruCell gru;
    nn::Dense head;
    int obs_dim = 0;
    int n_actions = 0;

    QNetwork() = default;
    QNetwork(const std::string& name, int obs, int actions, int hidden)
        : gru(name + ".gru", obs + actions, hidden), head(name + ".head", hidden, actions), obs_dim(obs),
          n_actions(actions) {}

    int hidden_width() const { return static_cast<int>(gru.hidden_width()); }
    int input_width() const { return obs_dim + n_actions; }

    void init(std::mt19937_64& rng) {
        gru.init(rng);
        head.init(rng);
    }

    nn::ParamSet params() {
        nn::ParamSet p = gru.params();
        p.add(head.params());
        return p;
    }

    // Plain forward of one GRU step for a batch of rows; no tape.
    Matrix step_value(const Matrix& x, const Matrix& h) const {
        const Index H = gru.hidden_width();
        Matrix gx = (x * gru.input_weight.value).rowwise() + gru.input_bias.value.row(0);
        Matrix gh = (h * gru.hidden_weight.value).rowwise() + gru.hidden_bias.value.row(0);
        Matrix rz = (gx.leftCols(2 * H) + gh.leftCols(2 * H)).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        Matrix n = (gx.rightCols(H).array() + rz.leftCols(H).array() * gh.rightCols(H).array()).tanh().matrix();
        Matrix z = rz.rightCols(H);
        return ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
    }

    Matrix q_value(const Matrix& h) const { return (h * head.weight.value).rowwise() + head.bias.value.row(0); }
};

// Network input row for one agent: observation then one-hot of the previous
// action (all zero at t = 0).
inline void fill_input(Matrix& x, Index row, const envs::Observation& o, int prev_action, int n_actions) {
    for (int k = 0; k < envs::kObsDim; ++k) x(row, k) = o.values[k];
    for (int a = 0; a < n_actions; ++a) x(row, envs::kObsDim + a) = a == prev_action ? 1.0 : 0.0;
}

struct LearnerConfig {
    int hidden = 64;
    double gamma = 0.99;
    double grad_clip = 10.0;
    bool strict_mask = false;
    nn::RmspropConfig optimizer{};
};

struct AgentLearner {
    int agent = 0;
    QNetwork online;
    QNetwork target;
    nn::RmspropState optimizer;
    LearnerConfig config;

    AgentLearner(int agent_index, int obs_dim, int n_actions, const LearnerConfig& cfg, std::uint64_t init_seed)
        : agent(agent_index),
          online("agent" + std::to_string(agent_index), obs_dim, n_actions, cfg.hidden),
          target("agent" + std::to_string(agent_index), obs_dim, n_actions, cfg.hidden),
          optimizer(cfg.optimizer),
          config(cfg) {
        std::mt19937_64 rng(init_seed);
        online.init(rng);
        sync_target();
    }

    void sync_target() { target.params().copy_values_from(online.params()); }
};

// Lowest index wins ties.
inline int argmax_row(const Matrix& q, Index row = 0) {
    int best = 0;
    for (Index a = 1; a < q.cols(); ++a)
        if (q(row, a) > q(row, best)) best = static_cast<int>(a);
    return best;
}

struct ActionChoice {
    int action = 0;
    Matrix hidden;
    bool explored = false;
};

// ε-greedy on the online network. The hidden state is always advanced.
inline ActionChoice select_action(const AgentLearner& learner, const envs::Observation& obs, int prev_action,
                                  const Matrix& hidden, double epsilon, std::mt19937_64& rng) {
    const QNetwork& net = learner.online;
    Matrix x(1, net.input_width());
    fill_input(x, 0, obs, prev_action, net.n_actions);
    ActionChoice out;
    out.hidden = net.step_value(x, hidden);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < epsilon) {
        std::uniform_int_distribution<int> pick(0, net.n_actions - 1);
        out.action = pick(rng);
        out.explored = true;
    } else {
        out.action = argmax_row(net.q_value(out.hidden));
    }
    return out;
}

// Time-major batch for one agent: row t*B + b holds episode b at step t.
struct AgentBatch {
    Index batch = 0;
    Index steps = 0;
    Matrix inputs;              // (L*B) x (D + A)
    std::vector<Index> actions; // L*B
    Matrix rewards;             // (L*B) x 1, already masked
    Matrix terminal;            // (L*B) x 1
    Matrix valid;               // (L*B) x 1, padding is 0
};

inline AgentBatch make_agent_batch(std::span<const StoredEpisode* const> episodes, int agent, int n_actions,
                                   bool strict_mask) {
    if (episodes.empty()) throw UsageError("td loss on an empty batch");
    AgentBatch b;
    b.batch = static_cast<Index>(episodes.size());
    for (auto* e : episodes) b.steps = std::max<Index>(b.steps, e->episode.length());
    const Index rows = b.batch * b.steps;
    b.inputs = Matrix::Zero(rows, envs::kObsDim + n_actions);
    b.actions.assign(static_cast<std::size_t>(rows), 0);
    b.rewards = Matrix::Zero(rows, 1);
    b.terminal = Matrix::Zero(rows, 1);
    b.valid = Matrix::Zero(rows, 1);
    for (Index e = 0; e < b.batch; ++e) {
        const auto& ep = episodes[e]->episode;
        const auto& mask = episodes[e]->mask;
        for (Index t = 0; t < ep.length(); ++t) {
            Index row = t * b.batch + e;
            int prev = t == 0 ? -1 : ep.actions[t - 1][agent];
            fill_input(b.inputs, row, ep.observations[t][agent], prev, n_actions);
            b.actions[row] = ep.actions[t][agent];
            b.rewards(row, 0) = masked_reward(ep.rewards[t], mask[t][agent], strict_mask);
            b.terminal(row, 0) = ep.terminal(static_cast<int>(t)) ? 1.0 : 0.0;
            b.valid(row, 0) = 1.0;
        }
    }
    return b;
}

// Q-values of every row under a network, no tape. Output (L*B) x A.
inline Matrix unroll_q_values(const QNetwork& net, const AgentBatch& b) {
    Matrix out(b.batch * b.steps, net.n_actions);
    Matrix h = Matrix::Zero(b.batch, net.hidden_width());
    for (Index t = 0; t < b.steps; ++t) {
        h = net.step_value(b.inputs.middleRows(t * b.batch, b.batch), h);
        out.middleRows(t * b.batch, b.batch) = net.q_value(h);
    }
    return out;
}

// y = r' for terminal steps, r' + γ max_a' Q_target(next) otherwise.
inline Matrix td_targets(const QNetwork& target, const AgentBatch& b, double gamma) {
    Matrix qt = unroll_q_values(target, b);
    Matrix y = b.rewards;
    for (Index t = 0; t < b.steps; ++t)
        for (Index e = 0; e < b.batch; ++e) {
            Index row = t * b.batch + e;
            if (b.valid(row, 0) == 0.0 || b.terminal(row, 0) != 0.0) continue;
            y(row, 0) += gamma * qt.row(row + b.batch).maxCoeff();
        }
    return y;
}

// Mean squared TD error over the valid steps of the batch, recorded on g.
inline Var td_loss(Graph& g, AgentLearner& learner, const AgentBatch& b) {
    if (b.batch == 0 || b.steps == 0) throw UsageError("td loss on an empty batch");
    QNetwork& net = learner.online;
    Matrix y = td_targets(learner.target, b, learner.config.gamma);
    Var proj = nn::gru_project_input(g, g.input(b.inputs), net.gru);
    Var states = nn::gru_unroll(g, proj, g.input(Matrix::Zero(b.batch, net.hidden_width())), net.gru);
    Var q = nn::dense_forward(g, states, net.head);
    Var chosen = g.pick(q, b.actions);
    return nn::mse_masked(g, chosen, y, b.valid);
}

inline Var td_loss(Graph& g, AgentLearner& learner, std::span<const StoredEpisode* const> episodes) {
    return td_loss(g, learner,
                   make_agent_batch(episodes, learner.agent, learner.online.n_actions, learner.config.strict_mask));
}

// One clipped RMSprop step on the TD loss; returns the loss value.
inline double learn_step(AgentLearner& learner, std::span<const StoredEpisode* const> episodes) {
    nn::ParamSet params = learner.online.params();
    Graph g;
    Var loss = td_loss(g, learner, episodes);
    g.backward(loss);
    params.clip_grad_norm(learner.config.grad_clip);
    nn::rmsprop_update(params, learner.optimizer);
    return g.scalar(loss);
}

// Q(s,a) <- (1-α)Q(s,a) + α(r + γ max_a' Q(s',a')); terminal drops the bootstrap.
inline void tabular_q_update(Matrix& q, Index s, Index a, double r, Index s_next, double alpha, double gamma,
                             bool terminal = false) {
    double boot = terminal ? 0.0 : q.row(s_next).maxCoeff();
    q(s, a) = (1.0 - alpha) * q(s, a) + alpha * (r + gamma * boot);
}

} // namespace cmarl::marl
