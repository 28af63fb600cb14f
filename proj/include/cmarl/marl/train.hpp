#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cmarl/envs/episode.hpp"
#include "cmarl/envs/oracles.hpp"
#include "cmarl/error.hpp"
#include "cmarl/marl/learner.hpp"
#include "cmarl/marl/replay.hpp"
#include "cmarl/marl/schedule.hpp"
#include "cmarl/metrics/stats.hpp"
#include "cmarl/nn/checkpoint.hpp"
#include "cmarl/seed.hpp"

namespace cmarl::marl {

struct TrainConfig {
    std::string env_id = "pp-sp";
    Trainer trainer = Trainer::idql;
    std::uint64_t seed = 0;
    std::int64_t total_steps = 200000;
    std::int64_t max_episodes = 0;  // 0: no cap; otherwise stop after this many episodes
    std::int64_t eval_interval = 10000;  // env steps between evaluations
    int eval_episodes = 20;
    int batch_episodes = 32;
    std::size_t buffer_capacity = 5000;
    int target_sync_episodes = 200;
    EpsilonSchedule epsilon{};
    LearnerConfig learner{};

    void validate() const {
        (void)envs::make_spec(env_id);
        if (total_steps <= 0) throw ConfigError("total_steps must be positive");
        if (max_episodes < 0) throw ConfigError("max_episodes must be non-negative");
        if (eval_interval <= 0) throw ConfigError("eval_interval must be positive");
        if (eval_episodes <= 0) throw ConfigError("eval_episodes must be positive");
        if (batch_episodes <= 0) throw ConfigError("batch_episodes must be positive");
        if (buffer_capacity == 0) throw ConfigError("buffer_capacity must be positive");
        if (target_sync_episodes <= 0) throw ConfigError("target_sync_episodes must be positive");
        if (!(epsilon.start >= 0.0 && epsilon.start <= 1.0 && epsilon.end >= 0.0 && epsilon.end <= 1.0))
            throw ConfigError("epsilon must lie in [0,1]");
        if (epsilon.anneal_episodes < 0) throw ConfigError("epsilon anneal must be non-negative");
        if (!(learner.gamma >= 0.0 && learner.gamma <= 1.0)) throw ConfigError("gamma must lie in [0,1]");
        if (!(learner.optimizer.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
        if (learner.hidden <= 0) throw ConfigError("hidden width must be positive");
    }
};

// Per-timestep bits for ICL. Defaults to the ground-truth predicates.
using StepOracle = std::function<std::vector<std::uint8_t>(const envs::EnvSpec&, std::span<const envs::Observation>,
                                                           double, envs::RewardKind)>;
// One bit per agent for a whole episode (ACD-MARL).
using EpisodeMasker = std::function<std::vector<std::uint8_t>(const envs::EpisodeRecord&)>;

struct TrainHooks {
    StepOracle step_oracle;
    EpisodeMasker episode_masker;
    std::function<void(const std::string&)> progress;
};

// How often each agent took part in a scoring event: captures, cutdowns, or
// Skirmish hits.
inline std::vector<long> agent_event_counts(const envs::EnvSpec& spec, std::span<const envs::StepInfo> infos) {
    std::vector<long> counts(static_cast<std::size_t>(spec.n_agents), 0);
    for (const auto& info : infos) {
        for (const auto& e : info.captures)
            for (int a : e.agents) ++counts[a];
        for (const auto& e : info.cutdowns)
            for (int a : e.agents) ++counts[a];
        for (const auto& h : info.hits) ++counts[h.agent];
    }
    return counts;
}

inline envs::EpisodeRecord run_episode(const envs::EnvSpec& spec, std::vector<AgentLearner>& learners,
                                       std::uint64_t env_seed, double epsilon, std::mt19937_64& rng) {
    const int n = spec.n_agents;
    std::vector<Matrix> hidden;
    for (auto& l : learners) hidden.push_back(Matrix::Zero(1, l.online.hidden_width()));
    std::vector<int> prev(static_cast<std::size_t>(n), -1);
    return envs::rollout(spec, env_seed, [&](const std::vector<envs::Observation>& obs, int) {
        std::vector<int> joint(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            ActionChoice c = select_action(learners[i], obs[i], prev[i], hidden[i], epsilon, rng);
            hidden[i] = std::move(c.hidden);
            joint[i] = c.action;
        }
        prev = joint;
        return joint;
    });
}

struct EvalSummary {
    int episodes = 0;
    double mean_return = 0.0;
    double ci95 = 0.0;
    double win_rate = 0.0;
    std::vector<double> returns;
    std::vector<long> agent_events;
};

// Greedy rollouts on a fixed set of environment seeds derived from `seed`.
inline EvalSummary evaluate(std::vector<AgentLearner>& learners, const envs::EnvSpec& spec, int n_episodes,
                            std::uint64_t seed) {
    EvalSummary s;
    s.episodes = n_episodes;
    s.agent_events.assign(static_cast<std::size_t>(spec.n_agents), 0);
    std::mt19937_64 unused(seed);
    int wins = 0;
    for (int k = 0; k < n_episodes; ++k) {
        auto ep = run_episode(spec, learners, derive_seed(seed, 2, static_cast<std::uint64_t>(k)), 0.0, unused);
        s.returns.push_back(ep.total_reward());
        wins += ep.won;
        auto c = agent_event_counts(spec, ep.infos);
        for (std::size_t i = 0; i < c.size(); ++i) s.agent_events[i] += c[i];
    }
    s.mean_return = metrics::mean(s.returns);
    s.ci95 = metrics::ci95_halfwidth(s.returns);
    s.win_rate = n_episodes > 0 ? static_cast<double>(wins) / n_episodes : 0.0;
    return s;
}

struct LogRow {
    std::int64_t step = 0;
    std::int64_t episode = 0;
    double eval_return_mean = 0.0;
    double eval_return_ci95 = 0.0;
    double win_rate = 0.0;
    double epsilon = 0.0;
    std::vector<long> agent_events;
};

struct TrainResult {
    std::vector<AgentLearner> learners;
    std::vector<LogRow> log;
    std::int64_t steps = 0;
    std::int64_t episodes = 0;
    double last_loss = 0.0;
};

inline std::vector<AgentLearner> make_learners(const envs::EnvSpec& spec, const TrainConfig& cfg) {
    std::vector<AgentLearner> out;
    for (int i = 0; i < spec.n_agents; ++i)
        out.emplace_back(i, spec.obs_dim(), spec.n_actions(), cfg.learner,
                         derive_seed(cfg.seed, 10, static_cast<std::uint64_t>(i)));
    return out;
}

inline std::vector<std::vector<std::uint8_t>> episode_mask(const envs::EnvSpec& spec, const TrainConfig& cfg,
                                                           const TrainHooks& hooks, const envs::EpisodeRecord& ep) {
    const auto n = static_cast<std::size_t>(spec.n_agents);
    std::vector<std::vector<std::uint8_t>> mask(static_cast<std::size_t>(ep.length()), std::vector<std::uint8_t>(n, 1));
    if (cfg.trainer == Trainer::icl) {
        for (int t = 0; t < ep.length(); ++t) {
            mask[t] = hooks.step_oracle ? hooks.step_oracle(spec, ep.observations[t], ep.rewards[t], ep.kinds[t])
                                        : envs::causal_bits(spec, ep.observations[t], ep.rewards[t], ep.kinds[t]);
            if (mask[t].size() != n) throw ConfigError("step oracle returned wrong number of bits");
        }
    } else if (cfg.trainer == Trainer::acd_marl) {
        if (!hooks.episode_masker) throw ConfigError("acd-marl training needs an episode masker");
        auto bits = hooks.episode_masker(ep);
        if (bits.size() != n) throw ConfigError("episode masker returned wrong number of bits");
        for (auto& row : mask) row = bits;
    }
    return mask;
}

inline TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    cfg.validate();
    const envs::EnvSpec spec = envs::make_spec(cfg.env_id);
    TrainResult res;
    res.learners = make_learners(spec, cfg);
    ReplayBuffer buffer(cfg.buffer_capacity);
    std::mt19937_64 act_rng(derive_seed(cfg.seed, 11));
    std::mt19937_64 sample_rng(derive_seed(cfg.seed, 12));
    const std::uint64_t eval_seed = derive_seed(cfg.seed, 13);

    // Rows are labelled with the nominal grid step (0, I, 2I, ... and finally
    // total_steps) so logs from different seeds line up; the episode column
    // says where training really was.
    auto log_eval = [&](std::int64_t grid_step, const EvalSummary* reuse) {
        EvalSummary s = reuse ? *reuse : evaluate(res.learners, spec, cfg.eval_episodes, eval_seed);
        LogRow row{grid_step, res.episodes, s.mean_return, s.ci95, s.win_rate, epsilon_at(res.episodes, cfg.epsilon),
                   s.agent_events};
        res.log.push_back(row);
        if (hooks.progress) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "step %lld episode %lld return %.3f win %.2f eps %.3f",
                          static_cast<long long>(grid_step), static_cast<long long>(res.episodes), s.mean_return,
                          s.win_rate, row.epsilon);
            hooks.progress(buf);
        }
        return s;
    };

    log_eval(0, nullptr);
    std::int64_t next_eval = cfg.eval_interval;
    auto more = [&] { return cfg.max_episodes == 0 || res.episodes < cfg.max_episodes; };
    while (res.steps < cfg.total_steps && more()) {
        double eps = epsilon_at(res.episodes, cfg.epsilon);
        auto ep = run_episode(spec, res.learners, derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(res.episodes)),
                              eps, act_rng);
        auto mask = episode_mask(spec, cfg, hooks, ep);
        res.steps += ep.length();
        ++res.episodes;
        ep.infos.clear();
        buffer.push({std::move(ep), std::move(mask)});

        auto batch = buffer.sample(static_cast<std::size_t>(cfg.batch_episodes), sample_rng);
        for (auto& l : res.learners) res.last_loss = learn_step(l, batch);
        if (res.episodes % cfg.target_sync_episodes == 0)
            for (auto& l : res.learners) l.sync_target();

        if (res.steps >= next_eval && next_eval <= cfg.total_steps) {
            EvalSummary s = log_eval(next_eval, nullptr);
            next_eval += cfg.eval_interval;
            // one long episode can cross several grid points
            for (; next_eval <= res.steps && next_eval <= cfg.total_steps; next_eval += cfg.eval_interval)
                log_eval(next_eval, &s);
        }
    }
    // an episode cap ends off the grid; label that row with the real step count
    const std::int64_t end_step = res.steps < cfg.total_steps ? res.steps : cfg.total_steps;
    if (res.log.back().step != end_step) log_eval(end_step, nullptr);
    return res;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline void write_train_log(const std::string& path, const std::vector<LogRow>& rows, int n_agents) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write " + path);
    os << "step,episode,eval_return_mean,eval_return_ci95,win_rate,epsilon";
    for (int i = 0; i < n_agents; ++i) os << ",events_agent" << i;
    os << "\n";
    for (const auto& r : rows) {
        os << r.step << ',' << r.episode << ',' << format_double(r.eval_return_mean) << ','
           << format_double(r.eval_return_ci95) << ',' << format_double(r.win_rate) << ',' << format_double(r.epsilon);
        for (long c : r.agent_events) os << ',' << c;
        os << "\n";
    }
}

inline std::vector<LogRow> read_train_log(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot read " + path);
    std::string line;
    if (!std::getline(is, line) || !line.starts_with("step,episode,")) throw FormatError(path + ": not a training log");
    std::vector<LogRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::size_t start = 0;
        for (std::size_t k = 0; k <= line.size(); ++k)
            if (k == line.size() || line[k] == ',') {
                f.push_back(line.substr(start, k - start));
                start = k + 1;
            }
        if (f.size() < 6) throw FormatError(path + ": short row");
        try {
            LogRow r;
            r.step = std::stoll(f[0]);
            r.episode = std::stoll(f[1]);
            r.eval_return_mean = std::stod(f[2]);
            r.eval_return_ci95 = std::stod(f[3]);
            r.win_rate = std::stod(f[4]);
            r.epsilon = std::stod(f[5]);
            for (std::size_t k = 6; k < f.size(); ++k) r.agent_events.push_back(std::stol(f[k]));
            rows.push_back(std::move(r));
        } catch (const std::exception&) {
            throw FormatError(path + ": bad number in row");
        }
    }
    return rows;
}

inline void save_learners(const std::string& dir, std::vector<AgentLearner>& learners, std::uint64_t seed) {
    for (auto& l : learners)
        nn::save_checkpoint(dir + "/agent" + std::to_string(l.agent) + ".ckpt", l.online.params(), seed);
}

inline void load_learners(const std::string& dir, std::vector<AgentLearner>& learners) {
    for (auto& l : learners) {
        nn::apply_checkpoint(nn::load_checkpoint(dir + "/agent" + std::to_string(l.agent) + ".ckpt"), l.online.params());
        l.sync_target();
    }
}

} // namespace cmarl::marl
