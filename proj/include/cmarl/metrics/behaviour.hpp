#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cmarl/envs/episode.hpp"
#include "cmarl/error.hpp"
#include "cmarl/metrics/stats.hpp"

namespace cmarl::metrics {

struct AgentBehaviour {
    long captures = 0;
    long cutdowns = 0;
    long shots = 0;  // attacks that hit an enemy
    double distance = 0.0;  // summed Euclidean distance to living teammates
};

struct BehaviourRecord {
    std::vector<AgentBehaviour> agents;
    std::vector<double> returns;
    std::vector<std::uint8_t> wins;

    long contributions(std::size_t i) const { return agents[i].captures + agents[i].cutdowns + agents[i].shots; }
    std::vector<double> contribution_vector() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < agents.size(); ++i) out.push_back(static_cast<double>(contributions(i)));
        return out;
    }
};

inline BehaviourRecord attribute_events(const envs::EpisodeRecord& ep) {
    if (!ep.has_infos()) throw UsageError("episode lacks step annotations");
    BehaviourRecord r;
    r.agents.assign(static_cast<std::size_t>(ep.n_agents), {});
    for (const auto& info : ep.infos) {
        for (const auto& e : info.captures)
            for (int a : e.agents) ++r.agents[a].captures;
        for (const auto& e : info.cutdowns)
            for (int a : e.agents) ++r.agents[a].cutdowns;
        for (const auto& h : info.hits)
            if (h.damage > 0) ++r.agents[h.agent].shots;
        for (int i = 0; i < ep.n_agents; ++i) {
            if (!info.alive[i]) continue;
            for (int j = 0; j < ep.n_agents; ++j)
                if (j != i && info.alive[j]) r.agents[i].distance += envs::euclidean(info.positions[i], info.positions[j]);
        }
    }
    r.returns.push_back(ep.total_reward());
    r.wins.push_back(ep.won ? 1 : 0);
    return r;
}

inline void merge_into(BehaviourRecord& total, const BehaviourRecord& part) {
    if (total.agents.empty()) total.agents.assign(part.agents.size(), {});
    if (total.agents.size() != part.agents.size()) throw UsageError("merging records of different team sizes");
    for (std::size_t i = 0; i < part.agents.size(); ++i) {
        total.agents[i].captures += part.agents[i].captures;
        total.agents[i].cutdowns += part.agents[i].cutdowns;
        total.agents[i].shots += part.agents[i].shots;
        total.agents[i].distance += part.agents[i].distance;
    }
    total.returns.insert(total.returns.end(), part.returns.begin(), part.returns.end());
    total.wins.insert(total.wins.end(), part.wins.begin(), part.wins.end());
}

// 1 - std(shares) / std(one-hot shares). 1 is perfectly even, 0 is one agent
// doing everything; no contributions at all counts as even.
inline double balance_index(const std::vector<double>& contributions) {
    const std::size_t n = contributions.size();
    if (n < 2) throw UsageError("balance index needs at least two agents");
    double total = 0.0;
    for (double c : contributions) {
        if (c < 0.0) throw UsageError("negative contribution");
        total += c;
    }
    if (total == 0.0) return 1.0;
    auto pop_std = [](const std::vector<double>& xs) {
        double m = mean(xs), s = 0.0;
        for (double x : xs) s += (x - m) * (x - m);
        return std::sqrt(s / static_cast<double>(xs.size()));
    };
    std::vector<double> shares, onehot(n, 0.0);
    for (double c : contributions) shares.push_back(c / total);
    onehot[0] = 1.0;
    return std::clamp(1.0 - pop_std(shares) / pop_std(onehot), 0.0, 1.0);
}

inline double balance_index(const BehaviourRecord& r) { return balance_index(r.contribution_vector()); }

} // namespace cmarl::metrics
