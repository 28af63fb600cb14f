#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cmarl/acd/dataset.hpp"
#include "cmarl/error.hpp"
#include "cmarl/nn/graph.hpp"
#include "cmarl/nn/layers.hpp"
#include "cmarl/nn/losses.hpp"

namespace cmarl::acd {

using nn::Graph;
using nn::Var;

struct AcdConfig {
    int n_nodes = 0;   // N + 1
    int T = 0;
    int D = envs::kObsDim;
    int encoder_hidden = 128;
    int decoder_hidden = 64;
    int message_width = 32;
    double temperature = 0.5;
    double variance = 5e-3;
};

// Ordered pairs (i, j), i != j, sender-major: (0,1), (0,2), ..., (1,0), ...
inline std::vector<std::pair<int, int>> directed_pairs(int n_nodes) {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n_nodes; ++i)
        for (int j = 0; j < n_nodes; ++j)
            if (i != j) out.emplace_back(i, j);
    return out;
}

inline int pair_index(int n_nodes, int i, int j) { return i * (n_nodes - 1) + (j < i ? j : j - 1); }

// Rows of S stacked samples: node rows s*K + k, edge rows s*E + p.
struct BatchLayout {
    int samples = 0;
    int K = 0;
    int E = 0;
    std::vector<Index> senders;
    std::vector<Index> receivers;

    BatchLayout(int s, int k) : samples(s), K(k), E(k * (k - 1)) {
        auto pairs = directed_pairs(k);
        for (int b = 0; b < s; ++b)
            for (auto [i, j] : pairs) {
                senders.push_back(static_cast<Index>(b * K + i));
                receivers.push_back(static_cast<Index>(b * K + j));
            }
    }
    Index node_rows() const { return static_cast<Index>(samples) * K; }
    Index edge_rows() const { return static_cast<Index>(samples) * E; }
};

struct AcdModel {
    AcdConfig config;
    // encoder
    nn::Dense node_in1, node_in2, edge1a, edge1b, node2a, node2b, edge2a, edge2b, edge_head;
    // decoder
    nn::Dense message;
    nn::GruCell cell;
    nn::Dense out1, out2;

    AcdModel() = default;
    explicit AcdModel(const AcdConfig& c) : config(c) {
        if (c.n_nodes < 2 || c.T < 2 || c.D < 1) throw ConfigError("invalid causal model shape");
        const int h = c.encoder_hidden, dh = c.decoder_hidden;
        node_in1 = nn::Dense("enc.node_in1", static_cast<Index>(c.T) * c.D, h);
        node_in2 = nn::Dense("enc.node_in2", h, h);
        edge1a = nn::Dense("enc.edge1a", 2 * h, h);
        edge1b = nn::Dense("enc.edge1b", h, h);
        node2a = nn::Dense("enc.node2a", h, h);
        node2b = nn::Dense("enc.node2b", h, h);
        edge2a = nn::Dense("enc.edge2a", 3 * h, h);
        edge2b = nn::Dense("enc.edge2b", h, h);
        edge_head = nn::Dense("enc.edge_head", h, 2);
        message = nn::Dense("dec.message", 2 * c.D, c.message_width);
        cell = nn::GruCell("dec.gru", c.D + c.message_width, dh);
        out1 = nn::Dense("dec.out1", dh, dh);
        out2 = nn::Dense("dec.out2", dh, c.D);
    }

    void init(std::mt19937_64& rng) {
        for (auto* d : {&node_in1, &node_in2, &edge1a, &edge1b, &node2a, &node2b, &edge2a, &edge2b, &edge_head,
                        &message, &out1, &out2})
            d->init(rng);
        cell.init(rng);
        // Silent messages at the start: otherwise random messages read as pure
        // noise to the decoder and every edge gets switched off in the first epoch.
        message.weight.value.setZero();
        message.bias.value.setZero();
    }

    nn::ParamSet encoder_params() {
        nn::ParamSet p;
        for (auto* d : {&node_in1, &node_in2, &edge1a, &edge1b, &node2a, &node2b, &edge2a, &edge2b, &edge_head})
            p.add(d->params());
        return p;
    }
    nn::ParamSet decoder_params() {
        nn::ParamSet p = message.params();
        p.add(cell.params());
        p.add(out1.params());
        p.add(out2.params());
        return p;
    }
    nn::ParamSet params() {
        nn::ParamSet p = encoder_params();
        p.add(decoder_params());
        return p;
    }
};

inline void check_samples(const AcdModel& m, std::span<const SeriesSample* const> batch) {
    if (batch.empty()) throw UsageError("empty sample batch");
    for (auto* s : batch)
        if (s->n_nodes() != m.config.n_nodes || s->T != m.config.T || s->D != m.config.D)
            throw ConfigError("sample shape (" + std::to_string(s->n_nodes()) + " nodes, T=" + std::to_string(s->T) +
                              ") does not match the causal model (" + std::to_string(m.config.n_nodes) + " nodes, T=" +
                              std::to_string(m.config.T) + ")");
}

// Edge logits, (S*E) x 2, column 1 = edge.
inline Var encode(Graph& g, AcdModel& m, std::span<const SeriesSample* const> batch) {
    check_samples(m, batch);
    const auto& c = m.config;
    BatchLayout lay(static_cast<int>(batch.size()), c.n_nodes);
    Matrix flat(lay.node_rows(), static_cast<Index>(c.T) * c.D);
    for (int b = 0; b < lay.samples; ++b)
        for (int k = 0; k < lay.K; ++k)
            flat.row(b * lay.K + k) = Eigen::Map<const Eigen::RowVectorXd>(batch[b]->nodes[k].data(), flat.cols());
    using nn::Activation;
    Var x = g.input(std::move(flat));
    Var h1 = nn::dense_forward(g, nn::dense_forward(g, x, m.node_in1, Activation::tanh), m.node_in2, Activation::tanh);
    Var pair1[] = {g.gather_rows(h1, lay.senders), g.gather_rows(h1, lay.receivers)};
    Var e1 = nn::dense_forward(g, nn::dense_forward(g, g.concat_cols(pair1), m.edge1a, Activation::tanh), m.edge1b,
                               Activation::tanh);
    Var agg = g.scale(g.scatter_add_rows(e1, lay.receivers, lay.node_rows()), 1.0 / (lay.K - 1));
    Var h2 = nn::dense_forward(g, nn::dense_forward(g, agg, m.node2a, Activation::tanh), m.node2b, Activation::tanh);
    Var pair2[] = {g.gather_rows(h2, lay.senders), g.gather_rows(h2, lay.receivers), e1};
    Var e2 = nn::dense_forward(g, nn::dense_forward(g, g.concat_cols(pair2), m.edge2a, Activation::tanh), m.edge2b,
                               Activation::tanh);
    return nn::dense_forward(g, e2, m.edge_head);
}

// Time-major node inputs: row t*(S*K) + s*K + k.
inline Matrix stack_time_major(std::span<const SeriesSample* const> batch, int K, int T, int D) {
    const Index nr = static_cast<Index>(batch.size()) * K;
    Matrix out(nr * T, D);
    for (Index b = 0; b < static_cast<Index>(batch.size()); ++b)
        for (int k = 0; k < K; ++k)
            for (int t = 0; t < T; ++t) out.row(t * nr + b * K + k) = batch[b]->nodes[k].row(t);
    return out;
}

// One-step-ahead predictions for steps 1..T-1 given teacher-forced inputs
// 0..T-2, time-major, (T-1)*(S*K) x D. `edge_weight` is (S*E) x 1: the
// weight of the "edge" type for each directed pair; messages from i to j are
// scaled by it, so a zero weight blocks i -> j entirely.
inline Var decode(Graph& g, AcdModel& m, std::span<const SeriesSample* const> batch, Var edge_weight) {
    check_samples(m, batch);
    const auto& c = m.config;
    BatchLayout lay(static_cast<int>(batch.size()), c.n_nodes);
    if (g.value(edge_weight).rows() != lay.edge_rows() || g.value(edge_weight).cols() != 1)
        throw ConfigError("edge weight shape mismatch");
    const Index nr = lay.node_rows();
    Matrix xs = stack_time_major(batch, c.n_nodes, c.T, c.D);
    Var h = g.input(Matrix::Zero(nr, c.decoder_hidden));
    std::vector<Var> preds;
    preds.reserve(static_cast<std::size_t>(c.T - 1));
    using nn::Activation;
    for (int t = 0; t + 1 < c.T; ++t) {
        Var x = g.input(xs.middleRows(t * nr, nr));
        // Messages see only the two endpoints' current values, never a hidden
        // state, so nothing can hop i -> j -> k within the graph.
        Var ends[] = {g.gather_rows(x, lay.senders), g.gather_rows(x, lay.receivers)};
        Var msg = g.scale_rows(nn::dense_forward(g, g.concat_cols(ends), m.message, Activation::tanh), edge_weight);
        Var agg = g.scatter_add_rows(msg, lay.receivers, nr);
        Var in[] = {x, agg};
        h = nn::gru_step(g, g.concat_cols(in), h, m.cell);
        Var delta = nn::dense_forward(g, nn::dense_forward(g, h, m.out1, Activation::tanh), m.out2);
        preds.push_back(g.add(x, delta));
    }
    return g.concat_rows(preds);
}

inline Matrix decode_targets(std::span<const SeriesSample* const> batch, const AcdConfig& c) {
    Matrix xs = stack_time_major(batch, c.n_nodes, c.T, c.D);
    const Index nr = static_cast<Index>(batch.size()) * c.n_nodes;
    return xs.bottomRows((c.T - 1) * nr);
}

struct ElboTerms {
    Var nll;
    Var kl;
    Var total;
};

// Per-sample averages: nll = sum (pred - target)^2 / (2 variance),
// kl = sum q log(q / (1/2)) over edges.
inline ElboTerms elbo_loss(Graph& g, Var pred, const Matrix& target, Var logits, double variance, int samples) {
    if (!(variance > 0.0)) throw ConfigError("ELBO variance must be positive");
    if (samples <= 0) throw UsageError("ELBO over zero samples");
    const Matrix& p = g.value(pred);
    if (p.rows() != target.rows() || p.cols() != target.cols()) throw ConfigError("ELBO prediction/target shape mismatch");
    Var diff = g.sub(pred, g.input(target));
    Var nll = g.scale(g.sum(g.mul(diff, diff)), 1.0 / (2.0 * variance * samples));
    Var logq = g.log_softmax_rows(logits);
    Var q = g.softmax_rows(logits);
    Var kl = g.scale(g.sum(g.mul(q, g.affine(logq, 1.0, std::log(2.0)))), 1.0 / samples);
    return {nll, kl, g.add(nll, kl)};
}

// Full forward for training: soft Gumbel edges (or the given noise).
inline ElboTerms elbo_forward(Graph& g, AcdModel& m, std::span<const SeriesSample* const> batch,
                              const Matrix& gumbel_noise, bool hard = false) {
    Var logits = encode(g, m, batch);
    Var z = nn::gumbel_softmax_with_noise(g, logits, gumbel_noise, m.config.temperature, hard);
    Var pred = decode(g, m, batch, g.slice_cols(z, 1, 1));
    return elbo_loss(g, pred, decode_targets(batch, m.config), logits, m.config.variance,
                     static_cast<int>(batch.size()));
}

// Hard adjacency from argmax logits; entry (i, j) = 1 for an i -> j edge.
inline std::vector<std::vector<std::uint8_t>> adjacency_from_logits(const Matrix& logits, int n_nodes,
                                                                   Index offset = 0) {
    std::vector<std::vector<std::uint8_t>> adj(n_nodes, std::vector<std::uint8_t>(n_nodes, 0));
    auto pairs = directed_pairs(n_nodes);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        Index row = offset + static_cast<Index>(p);
        adj[pairs[p].first][pairs[p].second] = logits(row, 1) > logits(row, 0) ? 1 : 0;
    }
    return adj;
}

// c_i = adjacency[i][N], the o_i -> r column.
inline std::vector<std::uint8_t> reward_column(const std::vector<std::vector<std::uint8_t>>& adj) {
    const int n = static_cast<int>(adj.size()) - 1;
    std::vector<std::uint8_t> c(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) c[i] = adj[i][n];
    return c;
}

inline std::vector<std::uint8_t> predict_c(AcdModel& m, const SeriesSample& s) {
    Graph g(false);
    const SeriesSample* batch[] = {&s};
    Var logits = encode(g, m, batch);
    return reward_column(adjacency_from_logits(g.value(logits), m.config.n_nodes));
}

} // namespace cmarl::acd
