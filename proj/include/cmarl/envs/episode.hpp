#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmarl/envs/oracles.hpp"
#include "cmarl/envs/spec.hpp"
#include "cmarl/envs/world.hpp"
#include "cmarl/error.hpp"

namespace cmarl::envs {

// One rollout. observations[t] is the joint observation the agents acted on
// at step t; rewards[t] and kinds[t] are what that step produced. The last
// step is the only terminal one.
struct EpisodeRecord {
    std::string env_id;
    std::uint64_t seed = 0;
    int n_agents = 0;
    std::vector<std::vector<Observation>> observations;
    std::vector<std::vector<int>> actions;
    std::vector<double> rewards;
    std::vector<RewardKind> kinds;
    std::vector<StepInfo> infos;  // in-memory only; not serialized
    bool won = false;
    std::vector<std::uint8_t> ground_truth;

    int length() const { return static_cast<int>(rewards.size()); }
    bool terminal(int t) const { return t + 1 == length(); }
    bool has_infos() const { return static_cast<int>(infos.size()) == length(); }
    double total_reward() const {
        double s = 0.0;
        for (double r : rewards) s += r;
        return s;
    }
    bool consistent() const {
        const auto n = static_cast<std::size_t>(length());
        if (observations.size() != n || actions.size() != n || kinds.size() != n) return false;
        for (std::size_t t = 0; t < n; ++t)
            if (observations[t].size() != static_cast<std::size_t>(n_agents) ||
                actions[t].size() != static_cast<std::size_t>(n_agents))
                return false;
        return true;
    }
};

using JointPolicy = std::function<std::vector<int>(const std::vector<Observation>&, int t)>;

// Runs one episode to termination with the given policy.
inline EpisodeRecord rollout(const EnvSpec& spec, std::uint64_t seed, const JointPolicy& policy) {
    GridWorld world(spec);
    std::vector<Observation> obs = world.reset(seed);
    EpisodeRecord ep;
    ep.env_id = spec.id;
    ep.seed = seed;
    ep.n_agents = spec.n_agents;
    for (int t = 0; t < spec.horizon; ++t) {
        std::vector<int> joint = policy(obs, t);
        StepResult res = world.step(joint);
        ep.observations.push_back(std::move(obs));
        ep.actions.push_back(std::move(joint));
        ep.rewards.push_back(res.reward);
        ep.kinds.push_back(res.info.kind);
        ep.won = res.info.won;
        ep.infos.push_back(std::move(res.info));
        obs = std::move(res.observations);
        if (res.done) break;
    }
    return ep;
}

// Per-episode label: agent i is credited if its predicate held at any
// positively rewarded step. For Skirmish the unconditional win bonus carries
// no information about who caused it, so every positive step (including the
// final one) is judged by the damage-sight condition.
inline std::vector<std::uint8_t> episode_ground_truth(const EnvSpec& spec, const EpisodeRecord& ep) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(spec.n_agents), 0);
    for (int t = 0; t < ep.length(); ++t) {
        if (!(ep.rewards[t] > 0.0)) continue;
        const RewardKind kind = spec.family == Family::skirmish ? RewardKind::intermediate : ep.kinds[t];
        auto step_bits = causal_bits(spec, ep.observations[t], ep.rewards[t], kind);
        for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= step_bits[i];
    }
    return bits;
}

inline nlohmann::json episode_to_json(const EpisodeRecord& ep) {
    nlohmann::json j;
    j["env_id"] = ep.env_id;
    j["seed"] = ep.seed;
    j["T"] = ep.length();
    j["N"] = ep.n_agents;
    j["D"] = kObsDim;
    j["won"] = ep.won;
    auto obs = nlohmann::json::array();
    for (const auto& step : ep.observations) {
        auto js = nlohmann::json::array();
        for (const auto& o : step) js.push_back(o.values);
        obs.push_back(std::move(js));
    }
    j["observations"] = std::move(obs);
    j["actions"] = ep.actions;
    j["rewards"] = ep.rewards;
    std::vector<int> kinds;
    for (auto k : ep.kinds) kinds.push_back(static_cast<int>(k));
    j["reward_kinds"] = kinds;
    j["ground_truth_bits"] = ep.ground_truth;
    return j;
}

inline EpisodeRecord episode_from_json(const nlohmann::json& j) {
    EpisodeRecord ep;
    try {
        ep.env_id = j.at("env_id").get<std::string>();
        ep.seed = j.at("seed").get<std::uint64_t>();
        ep.n_agents = j.at("N").get<int>();
        if (j.at("D").get<int>() != kObsDim) throw FormatError("episode observation width mismatch");
        ep.won = j.at("won").get<bool>();
        for (const auto& step : j.at("observations")) {
            std::vector<Observation> row;
            for (const auto& o : step) {
                Observation ob;
                if (o.size() != kObsDim) throw FormatError("observation of wrong width");
                for (int k = 0; k < kObsDim; ++k) ob.values[k] = o[k].get<double>();
                row.push_back(ob);
            }
            ep.observations.push_back(std::move(row));
        }
        ep.actions = j.at("actions").get<std::vector<std::vector<int>>>();
        ep.rewards = j.at("rewards").get<std::vector<double>>();
        for (int k : j.at("reward_kinds").get<std::vector<int>>()) ep.kinds.push_back(static_cast<RewardKind>(k));
        ep.ground_truth = j.at("ground_truth_bits").get<std::vector<std::uint8_t>>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed episode record: ") + e.what());
    }
    if (ep.length() != j.at("T").get<int>() || !ep.consistent()) throw FormatError("inconsistent episode record");
    return ep;
}

// One JSON object per line.
inline void write_episodes(const std::string& path, const std::vector<EpisodeRecord>& episodes) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write " + path);
    for (const auto& ep : episodes) os << episode_to_json(ep).dump() << "\n";
}

inline std::vector<EpisodeRecord> read_episodes(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot read " + path);
    std::vector<EpisodeRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(episode_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(path + ": " + e.what());
        }
    }
    return out;
}

} // namespace cmarl::envs
