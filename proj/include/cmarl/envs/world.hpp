#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cmarl/envs/spec.hpp"
#include "cmarl/error.hpp"

namespace cmarl::envs {

struct GridPos {
    int row = 0;
    int col = 0;
    friend bool operator==(const GridPos&, const GridPos&) = default;
};

inline int manhattan(GridPos a, GridPos b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }
inline int chebyshev(GridPos a, GridPos b) { return std::max(std::abs(a.row - b.row), std::abs(a.col - b.col)); }
inline double euclidean(GridPos a, GridPos b) { return std::hypot(a.row - b.row, a.col - b.col); }

// Fixed 53-wide agent observation:
//   [0,2)    own position / (grid-1)
//   [2,27)   5x5 target mask around the agent (prey presence, tree level / N,
//            or enemy presence scaled by 1 - chebyshev/(sight+1))
//   [27,52)  5x5 living-agent count mask / N (self included)
//   [52]     own health / max health (Skirmish), 0 elsewhere
// Dead agents observe all zeros.
struct Observation {
    static constexpr int kPos = 0;
    static constexpr int kTargets = 2;
    static constexpr int kAgents = kTargets + kViewCells;
    static constexpr int kStatus = kAgents + kViewCells;

    std::array<double, kObsDim> values{};

    static int cell(int dr, int dc) { return (dr + kViewRadius) * kViewSide + (dc + kViewRadius); }
    double target(int dr, int dc) const { return values[kTargets + cell(dr, dc)]; }
    double agents(int dr, int dc) const { return values[kAgents + cell(dr, dc)]; }
    double status() const { return values[kStatus]; }

    bool any_target() const {
        for (int k = 0; k < kViewCells; ++k)
            if (values[kTargets + k] != 0.0) return true;
        return false;
    }
    double agent_mass() const {
        double s = 0.0;
        for (int k = 0; k < kViewCells; ++k) s += values[kAgents + k];
        return s;
    }
    bool all_zero() const {
        return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
    }
    friend bool operator==(const Observation&, const Observation&) = default;
};

struct Unit {
    GridPos pos;
    bool alive = true;
    int hp = 0;     // Skirmish units
    int level = 0;  // Lumberjacks trees
};

struct WorldState {
    int t = 0;
    bool done = false;
    bool won = false;
    std::vector<Unit> agents;
    std::vector<Unit> targets;
    std::mt19937_64 rng;
};

enum class RewardKind { none, intermediate, win };

// A capture (Predator-Prey) or cutdown (Lumberjacks) and who took part.
struct TeamEvent {
    int target = 0;
    GridPos at;
    int level = 0;
    std::vector<int> agents;
};

// An agent attack that hit an enemy. `effective` is the part of the damage
// that removed health (capped by what the enemy had left).
struct HitEvent {
    int agent = 0;
    int enemy = 0;
    int damage = 0;
    int effective = 0;
};

struct StepInfo {
    std::vector<TeamEvent> captures;
    std::vector<TeamEvent> cutdowns;
    std::vector<HitEvent> hits;
    int damage_taken = 0;
    RewardKind kind = RewardKind::none;
    double event_reward = 0.0;
    double penalty = 0.0;
    bool won = false;
    std::vector<GridPos> positions;  // after the step
    std::vector<bool> alive;         // after the step
};

struct StepResult {
    std::vector<Observation> observations;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
};

namespace detail {

inline GridPos apply_move(GridPos p, int action, int grid) {
    GridPos q = p;
    switch (action) {
    case up: q.row -= 1; break;
    case down: q.row += 1; break;
    case left: q.col -= 1; break;
    case right: q.col += 1; break;
    default: break;
    }
    if (q.row < 0 || q.row >= grid || q.col < 0 || q.col >= grid) return p;
    return q;
}

inline void validate_actions(const WorldState& s, const EnvSpec& spec, std::span<const int> actions) {
    if (s.done) throw UsageError("step() on a finished episode");
    if (static_cast<int>(actions.size()) != spec.n_agents)
        throw UsageError("expected " + std::to_string(spec.n_agents) + " actions, got " + std::to_string(actions.size()));
    for (int a : actions)
        if (a < 0 || a >= spec.n_actions()) throw UsageError("action " + std::to_string(a) + " out of range");
}

inline void move_agents(WorldState& s, const EnvSpec& spec, std::span<const int> actions) {
    for (std::size_t i = 0; i < s.agents.size(); ++i)
        if (s.agents[i].alive) s.agents[i].pos = apply_move(s.agents[i].pos, actions[i], spec.grid);
}

inline void finish_info(const WorldState& s, StepInfo& info) {
    info.positions.clear();
    info.alive.clear();
    for (const auto& a : s.agents) {
        info.positions.push_back(a.pos);
        info.alive.push_back(a.alive);
    }
}

} // namespace detail

inline Observation observe(const WorldState& s, const EnvSpec& spec, int agent) {
    Observation o;
    const Unit& self = s.agents[agent];
    if (!self.alive) return o;
    const double n = static_cast<double>(spec.n_agents);
    o.values[Observation::kPos] = self.pos.row / static_cast<double>(spec.grid - 1);
    o.values[Observation::kPos + 1] = self.pos.col / static_cast<double>(spec.grid - 1);
    auto offset = [&](GridPos p, int& dr, int& dc) {
        dr = p.row - self.pos.row;
        dc = p.col - self.pos.col;
        return std::abs(dr) <= kViewRadius && std::abs(dc) <= kViewRadius;
    };
    int dr = 0, dc = 0;
    for (const auto& tg : s.targets) {
        if (!tg.alive || !offset(tg.pos, dr, dc)) continue;
        double& v = o.values[Observation::kTargets + Observation::cell(dr, dc)];
        switch (spec.family) {
        case Family::predator_prey: v = 1.0; break;
        case Family::lumberjacks: v = std::max(v, tg.level / n); break;
        case Family::skirmish:
            v = std::max(v, 1.0 - chebyshev(self.pos, tg.pos) / static_cast<double>(spec.sight + 1));
            break;
        }
    }
    for (const auto& a : s.agents) {
        if (!a.alive || !offset(a.pos, dr, dc)) continue;
        o.values[Observation::kAgents + Observation::cell(dr, dc)] += 1.0 / n;
    }
    if (spec.family == Family::skirmish) o.values[Observation::kStatus] = self.hp / static_cast<double>(spec.unit_hp);
    return o;
}

inline std::vector<Observation> observe_all(const WorldState& s, const EnvSpec& spec) {
    std::vector<Observation> out;
    out.reserve(s.agents.size());
    for (int i = 0; i < spec.n_agents; ++i) out.push_back(observe(s, spec, i));
    return out;
}

// Places agents and targets on distinct uniformly drawn cells.
inline WorldState reset_state(const EnvSpec& spec, std::uint64_t seed) {
    const int cells = spec.grid * spec.grid;
    const int entities = spec.n_agents + spec.n_targets;
    if (spec.n_agents <= 0 || spec.grid <= 1 || spec.horizon <= 0) throw ConfigError("invalid environment spec " + spec.id);
    if (entities > cells)
        throw ConfigError("cannot place " + std::to_string(entities) + " entities on " + std::to_string(cells) + " cells");
    WorldState s;
    s.rng.seed(seed);
    std::vector<int> pool(cells);
    for (int k = 0; k < cells; ++k) pool[k] = k;
    for (int k = 0; k < entities; ++k) {
        std::uniform_int_distribution<int> pick(k, cells - 1);
        std::swap(pool[k], pool[pick(s.rng)]);
    }
    auto pos_of = [&](int k) { return GridPos{pool[k] / spec.grid, pool[k] % spec.grid}; };
    for (int i = 0; i < spec.n_agents; ++i) {
        Unit u;
        u.pos = pos_of(i);
        u.hp = spec.unit_hp;
        s.agents.push_back(u);
    }
    std::uniform_int_distribution<int> level(1, spec.n_agents);
    for (int j = 0; j < spec.n_targets; ++j) {
        Unit u;
        u.pos = pos_of(spec.n_agents + j);
        u.hp = spec.unit_hp;
        if (spec.family == Family::lumberjacks) u.level = level(s.rng);
        s.targets.push_back(u);
    }
    return s;
}

inline StepResult step_predator_prey(WorldState& s, const EnvSpec& spec, std::span<const int> actions) {
    detail::validate_actions(s, spec, actions);
    StepResult res;
    detail::move_agents(s, spec, actions);
    // a prey is caught when two or more agents are on its cell or 4-neighbourhood
    for (std::size_t j = 0; j < s.targets.size(); ++j) {
        Unit& prey = s.targets[j];
        if (!prey.alive) continue;
        TeamEvent ev;
        ev.target = static_cast<int>(j);
        ev.at = prey.pos;
        for (std::size_t i = 0; i < s.agents.size(); ++i)
            if (manhattan(s.agents[i].pos, prey.pos) <= 1) ev.agents.push_back(static_cast<int>(i));
        if (ev.agents.size() >= 2) {
            prey.alive = false;
            res.info.captures.push_back(std::move(ev));
        }
    }
    std::uniform_int_distribution<int> move(0, 4);
    for (auto& prey : s.targets)
        if (prey.alive) prey.pos = detail::apply_move(prey.pos, move(s.rng), spec.grid);

    s.t += 1;
    res.info.event_reward = spec.event_reward * static_cast<double>(res.info.captures.size());
    res.info.penalty = spec.step_penalty;
    res.info.kind = res.info.captures.empty() ? RewardKind::none : RewardKind::intermediate;
    res.reward = res.info.event_reward + res.info.penalty;
    bool cleared = std::none_of(s.targets.begin(), s.targets.end(), [](const Unit& u) { return u.alive; });
    s.won = cleared;
    res.info.won = cleared;
    s.done = cleared || s.t >= spec.horizon;
    res.done = s.done;
    detail::finish_info(s, res.info);
    res.observations = observe_all(s, spec);
    return res;
}

inline StepResult step_lumberjacks(WorldState& s, const EnvSpec& spec, std::span<const int> actions) {
    detail::validate_actions(s, spec, actions);
    StepResult res;
    detail::move_agents(s, spec, actions);
    for (std::size_t j = 0; j < s.targets.size(); ++j) {
        Unit& tree = s.targets[j];
        if (!tree.alive) continue;
        TeamEvent ev;
        ev.target = static_cast<int>(j);
        ev.at = tree.pos;
        ev.level = tree.level;
        for (std::size_t i = 0; i < s.agents.size(); ++i)
            if (s.agents[i].pos == tree.pos) ev.agents.push_back(static_cast<int>(i));
        if (static_cast<int>(ev.agents.size()) >= tree.level) {
            tree.alive = false;
            res.info.cutdowns.push_back(std::move(ev));
        }
    }
    s.t += 1;
    res.info.event_reward = spec.event_reward * static_cast<double>(res.info.cutdowns.size());
    res.info.penalty = spec.step_penalty;
    res.info.kind = res.info.cutdowns.empty() ? RewardKind::none : RewardKind::intermediate;
    res.reward = res.info.event_reward + res.info.penalty;
    bool cleared = std::none_of(s.targets.begin(), s.targets.end(), [](const Unit& u) { return u.alive; });
    s.won = cleared;
    res.info.won = cleared;
    s.done = cleared || s.t >= spec.horizon;
    res.done = s.done;
    detail::finish_info(s, res.info);
    res.observations = observe_all(s, spec);
    return res;
}

// Agents move, then attacks from both sides resolve simultaneously against
// the post-move positions. Enemies are stationary and shoot the nearest
// living agent within sight.
inline StepResult step_skirmish(WorldState& s, const EnvSpec& spec, std::span<const int> actions) {
    detail::validate_actions(s, spec, actions);
    StepResult res;
    detail::move_agents(s, spec, actions);

    auto nearest = [&](GridPos from, const std::vector<Unit>& units) {
        int best = -1;
        int best_d = spec.sight + 1;
        for (std::size_t k = 0; k < units.size(); ++k) {
            if (!units[k].alive) continue;
            int d = chebyshev(from, units[k].pos);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(k);
            }
        }
        return best;
    };

    std::vector<int> enemy_damage(s.targets.size(), 0);
    std::vector<int> agent_damage(s.agents.size(), 0);
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        if (!s.agents[i].alive || actions[i] != attack) continue;
        int e = nearest(s.agents[i].pos, s.targets);
        if (e < 0) continue;
        enemy_damage[e] += spec.damage;
        res.info.hits.push_back({static_cast<int>(i), e, spec.damage, 0});
    }
    for (const auto& enemy : s.targets) {
        if (!enemy.alive) continue;
        int a = nearest(enemy.pos, s.agents);
        if (a >= 0) agent_damage[a] += spec.damage;
    }

    int dealt = 0;
    std::vector<int> remaining(s.targets.size());
    for (std::size_t e = 0; e < s.targets.size(); ++e) remaining[e] = s.targets[e].hp;
    for (auto& h : res.info.hits) {
        h.effective = std::min(h.damage, remaining[h.enemy]);
        remaining[h.enemy] -= h.effective;
        dealt += h.effective;
    }
    for (std::size_t e = 0; e < s.targets.size(); ++e) {
        s.targets[e].hp = remaining[e];
        if (s.targets[e].alive && s.targets[e].hp <= 0) s.targets[e].alive = false;
    }
    for (std::size_t i = 0; i < s.agents.size(); ++i) {
        if (!s.agents[i].alive) continue;
        int taken = std::min(agent_damage[i], s.agents[i].hp);
        res.info.damage_taken += taken;
        s.agents[i].hp -= taken;
        if (s.agents[i].hp <= 0) s.agents[i].alive = false;
    }

    s.t += 1;
    const double pool = static_cast<double>(spec.unit_hp) * static_cast<double>(spec.n_targets);
    res.info.event_reward = dealt / pool;
    bool won = std::none_of(s.targets.begin(), s.targets.end(), [](const Unit& u) { return u.alive; });
    bool lost = std::none_of(s.agents.begin(), s.agents.end(), [](const Unit& u) { return u.alive; });
    if (won) res.info.event_reward += spec.win_bonus;
    res.info.kind = won ? RewardKind::win : (dealt > 0 ? RewardKind::intermediate : RewardKind::none);
    res.info.won = won;
    res.reward = res.info.event_reward;
    s.won = won;
    s.done = won || lost || s.t >= spec.horizon;
    res.done = s.done;
    detail::finish_info(s, res.info);
    res.observations = observe_all(s, spec);
    return res;
}

// Owns a spec and a state; dispatches to the task's step rule.
class GridWorld {
public:
    explicit GridWorld(EnvSpec spec) : spec_(std::move(spec)) {}

    std::vector<Observation> reset(std::uint64_t seed) {
        state_ = reset_state(spec_, seed);
        return observe_all(state_, spec_);
    }

    StepResult step(std::span<const int> actions) {
        switch (spec_.family) {
        case Family::predator_prey: return step_predator_prey(state_, spec_, actions);
        case Family::lumberjacks: return step_lumberjacks(state_, spec_, actions);
        case Family::skirmish: return step_skirmish(state_, spec_, actions);
        }
        throw ConfigError("unknown family");
    }

    std::vector<Observation> observations() const { return observe_all(state_, spec_); }

    const EnvSpec& spec() const { return spec_; }
    const WorldState& state() const { return state_; }
    WorldState& mutable_state() { return state_; }

private:
    EnvSpec spec_;
    WorldState state_;
};

} // namespace cmarl::envs
