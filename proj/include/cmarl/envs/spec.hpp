#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cmarl/error.hpp"

namespace cmarl::envs {

enum class Family { predator_prey, lumberjacks, skirmish };

// Moves are shared by every task; Skirmish adds attack.
enum Action : int { up = 0, down = 1, left = 2, right = 3, stay = 4, attack = 5 };

inline constexpr int kViewRadius = 2;
inline constexpr int kViewSide = 2 * kViewRadius + 1;
inline constexpr int kViewCells = kViewSide * kViewSide;
inline constexpr int kObsDim = 2 + kViewCells + kViewCells + 1;
static_assert(kObsDim == 53);

struct EnvSpec {
    std::string id;            // pp, pp-sp, lj, lj-sp, sk3, sk3-sp, sk5, sk5-sp
    Family family = Family::predator_prey;
    int n_agents = 0;
    int grid = 0;
    int horizon = 0;           // episode length T
    int n_targets = 0;         // preys, trees or enemies
    double event_reward = 0.0; // per capture / cutdown
    double step_penalty = 0.0;
    // Skirmish only
    int sight = 0;
    int unit_hp = 0;
    int damage = 0;
    double win_bonus = 0.0;

    int n_actions() const { return family == Family::skirmish ? 6 : 5; }
    int obs_dim() const { return kObsDim; }
    bool sparse() const { return id.ends_with("-sp"); }
    // Observation/reward series per episode: N observations plus the reward.
    int n_nodes() const { return n_agents + 1; }
};

inline const std::vector<std::string>& known_env_ids() {
    static const std::vector<std::string> ids{"pp", "pp-sp", "lj", "lj-sp", "sk3", "sk3-sp", "sk5", "sk5-sp"};
    return ids;
}

inline EnvSpec make_spec(std::string_view id) {
    EnvSpec s;
    s.id = std::string(id);
    if (id == "pp" || id == "pp-sp") {
        s.family = Family::predator_prey;
        s.grid = 14;
        s.horizon = 100;
        s.event_reward = 5.0;
        s.step_penalty = -0.01;
        s.n_agents = id == "pp" ? 4 : 5;
        s.n_targets = id == "pp" ? 2 : 1;
    } else if (id == "lj" || id == "lj-sp") {
        s.family = Family::lumberjacks;
        s.grid = 8;
        s.horizon = 100;
        s.event_reward = 5.0;
        s.step_penalty = -0.1;
        s.n_agents = 4;
        s.n_targets = id == "lj" ? 8 : 1;
    } else if (id == "sk3" || id == "sk3-sp" || id == "sk5" || id == "sk5-sp") {
        s.family = Family::skirmish;
        s.grid = 10;
        bool five = id.starts_with("sk5");
        s.n_agents = five ? 5 : 3;
        s.horizon = five ? 70 : 60;
        s.n_targets = id.ends_with("-sp") ? 1 : s.n_agents;
        s.sight = kViewRadius;
        s.unit_hp = 3;
        s.damage = 1;
        s.win_bonus = 10.0;
    } else {
        throw ConfigError("unknown environment id '" + std::string(id) + "'");
    }
    return s;
}

} // namespace cmarl::envs
