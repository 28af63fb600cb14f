#pragma once

#include <cstdlib>
#include <random>
#include <vector>

#include "cmarl/envs/spec.hpp"
#include "cmarl/envs/world.hpp"

namespace cmarl::envs {

// Decentralised heuristic that only reads each agent's own observation:
// head for the nearest visible target (preys: stop once adjacent; trees: stop
// on the cell; enemies: shoot), otherwise wander. Used to produce successful
// episodes for causal-discovery datasets and as a hand-built reference policy.
class ScriptedPolicy {
public:
    ScriptedPolicy(EnvSpec spec, std::uint64_t seed) : spec_(std::move(spec)), rng_(seed) {}

    int act(const Observation& o) {
        if (o.all_zero()) return stay;
        if (spec_.family == Family::skirmish) {
            if (o.any_target()) return attack;
            return wander();
        }
        int best_dr = 0, best_dc = 0, best_d = 1 << 20;
        for (int dr = -kViewRadius; dr <= kViewRadius; ++dr)
            for (int dc = -kViewRadius; dc <= kViewRadius; ++dc) {
                if (o.target(dr, dc) == 0.0) continue;
                int d = std::abs(dr) + std::abs(dc);
                if (d < best_d) {
                    best_d = d;
                    best_dr = dr;
                    best_dc = dc;
                }
            }
        if (best_d == (1 << 20)) return wander();
        int arrive = spec_.family == Family::predator_prey ? 1 : 0;
        if (best_d <= arrive) return stay;
        if (std::abs(best_dr) >= std::abs(best_dc)) return best_dr < 0 ? up : down;
        return best_dc < 0 ? left : right;
    }

    std::vector<int> act_all(const std::vector<Observation>& obs) {
        std::vector<int> out;
        out.reserve(obs.size());
        for (const auto& o : obs) out.push_back(act(o));
        return out;
    }

private:
    int wander() {
        std::uniform_int_distribution<int> d(0, 3);
        return d(rng_);
    }

    EnvSpec spec_;
    std::mt19937_64 rng_;
};

} // namespace cmarl::envs
