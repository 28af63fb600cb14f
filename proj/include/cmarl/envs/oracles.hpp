#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cmarl/envs/spec.hpp"
#include "cmarl/envs/world.hpp"

namespace cmarl::envs {

// Ground-truth causality predicates. `prev` is the agent's observation at the
// step before the reward was issued. All of them return 0 for reward <= 0.

// C1: a prey was visible before a capture.
inline bool causal_oracle_pp(const Observation& prev, double reward) {
    return reward > 0.0 && prev.any_target();
}

// C1 and C2: a tree was visible, and the agents visible (self included)
// numbered at least the level of one of the visible trees.
inline bool causal_oracle_lj(const Observation& prev, double reward, int n_agents) {
    if (!(reward > 0.0)) return false;
    const double n = static_cast<double>(n_agents);
    const long seen = std::lround(prev.agent_mass() * n);
    for (int dr = -kViewRadius; dr <= kViewRadius; ++dr) {
        for (int dc = -kViewRadius; dc <= kViewRadius; ++dc) {
            double v = prev.target(dr, dc);
            if (v == 0.0) continue;
            if (seen >= std::lround(v * n)) return true;
        }
    }
    return false;
}

// Damage rewards credit agents that had an enemy in sight; the win bonus
// credits everyone, dead or alive.
inline bool causal_oracle_sk(const Observation& prev, RewardKind kind, double reward) {
    if (!(reward > 0.0)) return false;
    if (kind == RewardKind::win) return true;
    if (kind == RewardKind::intermediate) return prev.any_target();
    return false;
}

// Per-agent bits for one transition, dispatched on the task family.
inline std::vector<std::uint8_t> causal_bits(const EnvSpec& spec, std::span<const Observation> prev, double reward,
                                             RewardKind kind) {
    std::vector<std::uint8_t> bits(prev.size(), 0);
    for (std::size_t i = 0; i < prev.size(); ++i) {
        bool c = false;
        switch (spec.family) {
        case Family::predator_prey: c = causal_oracle_pp(prev[i], reward); break;
        case Family::lumberjacks: c = causal_oracle_lj(prev[i], reward, spec.n_agents); break;
        case Family::skirmish: c = causal_oracle_sk(prev[i], kind, reward); break;
        }
        bits[i] = c ? 1 : 0;
    }
    return bits;
}

} // namespace cmarl::envs
