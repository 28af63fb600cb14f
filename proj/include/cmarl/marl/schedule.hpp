#pragma once

#include <algorithm>
#include <cstdint>

namespace cmarl::marl {

struct EpsilonSchedule {
    double start = 1.0;
    double end = 0.05;
    std::int64_t anneal_episodes = 50000;
};

// Linear from start to end over anneal_episodes, flat afterwards.
inline double epsilon_at(std::int64_t episode, const EpsilonSchedule& s = {}) {
    if (episode <= 0) return s.start;
    if (s.anneal_episodes <= 0 || episode >= s.anneal_episodes) return s.end;
    double frac = static_cast<double>(episode) / static_cast<double>(s.anneal_episodes);
    return std::max(s.end, s.start - frac * (s.start - s.end));
}

// Positive rewards are gated by the causality bit. Non-positive rewards pass
// unchanged unless strict, in which case every reward is multiplied.
inline double masked_reward(double reward, std::uint8_t c_bit, bool strict = false) {
    if (reward > 0.0 || strict) return c_bit ? reward : 0.0;
    return reward;
}

enum class Trainer { idql, icl, acd_marl };

inline const char* trainer_name(Trainer t) {
    switch (t) {
    case Trainer::idql: return "idql";
    case Trainer::icl: return "icl";
    case Trainer::acd_marl: return "acd-marl";
    }
    return "?";
}

} // namespace cmarl::marl
