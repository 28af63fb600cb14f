#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cmarl/acd/savgol.hpp"
#include "cmarl/envs/episode.hpp"
#include "cmarl/error.hpp"
#include "cmarl/nn/tensor.hpp"
#include "cmarl/seed.hpp"

namespace cmarl::acd {

using nn::Index;
using nn::Matrix;

// Node series [o_1 .. o_N, r], each T x D. The reward node carries the
// reward in column 0 and zeros elsewhere; row 0 is always 0.
struct SeriesSample {
    std::string env_id;
    std::uint64_t seed = 0;
    int n_agents = 0;
    int T = 0;
    int D = 0;
    std::vector<Matrix> nodes;
    std::vector<std::uint8_t> ground_truth;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
};

// Raw series of an episode, padded to the environment horizon with zeros
// (the same all-zero observation a dead agent sees). Repeating the last
// pre-terminal frame instead would show the enemy in view for the rest of
// the series with no reward following.
// The reward for acting on row t is stored in row t+1, next to the
// observation it arrives with, so "o_i at t helps predict r at t+1" is the
// relation the decoder can actually exploit. A reward earned on the very
// last row of a full-length episode has no row left and is dropped.
inline SeriesSample make_sample(const envs::EnvSpec& spec, const envs::EpisodeRecord& ep) {
    if (ep.length() == 0) throw FormatError("empty episode");
    if (ep.length() > spec.horizon) throw FormatError("episode longer than the horizon");
    SeriesSample s;
    s.env_id = ep.env_id;
    s.seed = ep.seed;
    s.n_agents = ep.n_agents;
    s.T = spec.horizon;
    s.D = envs::kObsDim;
    s.ground_truth = ep.ground_truth.empty() ? envs::episode_ground_truth(spec, ep) : ep.ground_truth;
    for (int i = 0; i <= ep.n_agents; ++i) s.nodes.push_back(Matrix::Zero(s.T, s.D));
    for (int t = 0; t < ep.length(); ++t) {
        for (int i = 0; i < ep.n_agents; ++i)
            for (int d = 0; d < s.D; ++d) s.nodes[i](t, d) = ep.observations[t][i].values[d];
        if (t + 1 < s.T) s.nodes[ep.n_agents](t + 1, 0) = ep.rewards[t];
    }
    return s;
}

// Smooths every observation channel and min-max scales the reward to [0,1]
// (a constant reward series maps to zeros).
inline SeriesSample preprocess(const SeriesSample& in) {
    SeriesSample out = in;
    SavgolFilter filter(sg_window(in.T), kSgOrder);
    std::vector<double> col(static_cast<std::size_t>(in.T));
    for (int i = 0; i < in.n_agents; ++i)
        for (int d = 0; d < in.D; ++d) {
            for (int t = 0; t < in.T; ++t) col[t] = in.nodes[i](t, d);
            auto sm = filter.apply(col);
            for (int t = 0; t < in.T; ++t) out.nodes[i](t, d) = sm[t];
        }
    auto& r = out.nodes[in.n_agents];
    const double lo = r.col(0).minCoeff(), hi = r.col(0).maxCoeff();
    if (hi > lo) r.col(0) = ((r.col(0).array() - lo) / (hi - lo)).matrix();
    else r.col(0).setZero();
    return out;
}

// Rolls out episodes until n winning ones are kept. Gives up after
// max_attempts rollouts and reports the win rate seen.
inline std::vector<envs::EpisodeRecord> collect_winning(
    const envs::EnvSpec& spec, const std::function<envs::JointPolicy(std::uint64_t episode_seed)>& policy_for,
    int n_episodes, std::uint64_t seed, int max_attempts = -1, int* attempts_out = nullptr) {
    std::vector<envs::EpisodeRecord> kept;
    if (n_episodes <= 0) return kept;
    if (max_attempts < 0) max_attempts = std::max(200, 20 * n_episodes);
    int attempts = 0;
    while (static_cast<int>(kept.size()) < n_episodes) {
        if (attempts >= max_attempts) {
            double rate = attempts ? static_cast<double>(kept.size()) / attempts : 0.0;
            throw CollectionError("only " + std::to_string(kept.size()) + " winning episodes in " +
                                      std::to_string(attempts) + " rollouts",
                                  rate);
        }
        const std::uint64_t ep_seed = derive_seed(seed, 20, static_cast<std::uint64_t>(attempts));
        ++attempts;
        auto ep = envs::rollout(spec, ep_seed, policy_for(ep_seed));
        if (!ep.won) continue;
        ep.ground_truth = envs::episode_ground_truth(spec, ep);
        ep.infos.clear();
        kept.push_back(std::move(ep));
    }
    if (attempts_out) *attempts_out = attempts;
    return kept;
}

inline std::vector<SeriesSample> to_samples(const envs::EnvSpec& spec, const std::vector<envs::EpisodeRecord>& eps) {
    std::vector<SeriesSample> out;
    out.reserve(eps.size());
    for (const auto& ep : eps) out.push_back(preprocess(make_sample(spec, ep)));
    return out;
}

// First 80% for training, the rest held out (episode order is already random).
inline std::pair<std::vector<SeriesSample>, std::vector<SeriesSample>> split_80_20(std::vector<SeriesSample> all) {
    const std::size_t cut = all.size() * 4 / 5;
    std::vector<SeriesSample> held(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(cut)),
                                   std::make_move_iterator(all.end()));
    all.resize(cut);
    return {std::move(all), std::move(held)};
}

} // namespace cmarl::acd
