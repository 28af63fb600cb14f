#pragma once

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cmarl/acd/dataset.hpp"
#include "cmarl/acd/train.hpp"
#include "cmarl/envs/episode.hpp"
#include "cmarl/envs/scripted.hpp"
#include "cmarl/harness/config.hpp"
#include "cmarl/harness/errors.hpp"
#include "cmarl/harness/manifest.hpp"
#include "cmarl/marl/train.hpp"
#include "cmarl/metrics/behaviour.hpp"
#include "cmarl/metrics/curves.hpp"
#include "cmarl/metrics/stats.hpp"
#include "cmarl/metrics/svg.hpp"
#include "cmarl/seed.hpp"

namespace cmarl::harness {

using Logger = std::function<void(const std::string&)>;

struct RunOptions {
    unsigned jobs = 1;  // seeds trained concurrently
    Logger log;
};

namespace detail {

inline void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p);
    if (!os) throw FormatError("cannot write " + p.string());
    os << text;
}

inline json read_json(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw FormatError("cannot read " + p.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw FormatError(p.string() + ": " + e.what());
    }
}

inline std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

// Runs fn(k) for k in [0, n) on up to `jobs` threads and rethrows the first
// failure (by index) once every worker has finished.
inline void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::mutex mu;
    std::size_t next = 0;
    auto worker = [&] {
        for (;;) {
            std::size_t k;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (next == n) return;
                k = next++;
            }
            try {
                fn(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const unsigned t = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
    if (t == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < t; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline std::vector<envs::EpisodeRecord> read_all_episodes(const std::vector<std::string>& files) {
    std::vector<envs::EpisodeRecord> out;
    for (const auto& f : files) {
        auto part = envs::read_episodes(f);
        out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return out;
}

// All episodes must come from one environment.
inline envs::EnvSpec dataset_spec(const std::vector<envs::EpisodeRecord>& eps) {
    if (eps.empty()) throw ConfigError("dataset holds no episodes");
    std::set<std::string> ids;
    for (const auto& e : eps) ids.insert(e.env_id);
    if (ids.size() > 1) {
        std::string all;
        for (const auto& id : ids) all += (all.empty() ? "" : ",") + id;
        throw ConfigError("dataset mixes environments: " + all);
    }
    auto spec = envs::make_spec(*ids.begin());
    for (const auto& e : eps)
        if (e.n_agents != spec.n_agents) throw ConfigError("episode team size does not match " + spec.id);
    return spec;
}

inline void write_behaviour_csv(const fs::path& p, const metrics::BehaviourRecord& r) {
    std::ostringstream os;
    os << "agent,captures,cutdowns,shots,distance\n";
    for (std::size_t i = 0; i < r.agents.size(); ++i)
        os << i << "," << r.agents[i].captures << "," << r.agents[i].cutdowns << "," << r.agents[i].shots << ","
           << marl::format_double(r.agents[i].distance) << "\n";
    write_text(p, os.str());
}

inline metrics::BehaviourRecord read_behaviour_csv(const fs::path& p) {
    std::ifstream is(p);
    if (!is) throw FormatError("cannot read " + p.string());
    metrics::BehaviourRecord r;
    std::string line;
    std::getline(is, line);
    if (line != "agent,captures,cutdowns,shots,distance") throw FormatError(p.string() + ": unexpected header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        metrics::AgentBehaviour a;
        char c1, c2, c3, c4;
        int idx;
        std::istringstream ls(line);
        if (!(ls >> idx >> c1 >> a.captures >> c2 >> a.cutdowns >> c3 >> a.shots >> c4 >> a.distance))
            throw FormatError(p.string() + ": bad row");
        r.agents.push_back(a);
    }
    return r;
}

inline void write_accuracy_csv(const fs::path& p, const std::string& env, const acd::ConfusionReport& r) {
    std::ostringstream os;
    os << "env,correct,fp,fn,n_pairs\n"
       << env << "," << marl::format_double(r.correct) << "," << marl::format_double(r.fp) << ","
       << marl::format_double(r.fn) << "," << r.n_pairs << "\n";
    write_text(p, os.str());
}

}  // namespace detail

// ---------------------------------------------------------------- manifests

inline Manifest make_train_manifest(const TrainSettings& s, const std::string& out, std::string experiment = "") {
    validate(s);
    Manifest m;
    m.command = "train";
    m.experiment = experiment.empty() ? s.run.env_id + "-" + marl::trainer_name(s.run.trainer) : std::move(experiment);
    TrainSettings copy = s;
    if (!copy.encoder.empty()) copy.encoder = absolute_path(copy.encoder);
    m.config = to_json(copy);
    m.seeds = s.seeds;
    m.output_directory = absolute_path(out);
    if (!copy.encoder.empty()) record_input(m, copy.encoder);
    return m;
}

inline Manifest make_collect_manifest(const CollectSettings& s, const std::string& out) {
    (void)envs::make_spec(s.env_id);
    if (s.episodes <= 0) throw UsageError("--episodes must be positive");
    Manifest m;
    m.command = "collect";
    m.experiment = "collect-" + s.env_id;
    CollectSettings copy = s;
    if (copy.policy != "scripted") copy.policy = absolute_path(copy.policy);
    m.config = to_json(copy);
    m.seeds = {s.seed};
    m.output_directory = absolute_path(out);
    if (copy.policy != "scripted") record_input(m, copy.policy);
    return m;
}

inline Manifest make_acd_manifest(const AcdSettings& s, const std::string& out) {
    if (s.data.empty()) throw UsageError("--data needs at least one file");
    if (s.epochs <= 0 || s.batch <= 0) throw ConfigError("epochs and batch must be positive");
    if (s.sigma < 0.0) throw ConfigError("sigma must be positive (0 selects the default)");
    Manifest m;
    m.command = "acd";
    m.experiment = "acd";
    AcdSettings copy = s;
    for (auto& d : copy.data) d = absolute_path(d);
    m.config = to_json(copy);
    m.seeds = {s.seed};
    m.output_directory = absolute_path(out);
    for (const auto& d : copy.data) record_input(m, d);
    return m;
}

inline Manifest make_acd_eval_manifest(const AcdEvalSettings& s, const std::string& out) {
    if (s.data.empty()) throw UsageError("--data needs at least one file");
    if (s.model.empty()) throw UsageError("--model is required");
    Manifest m;
    m.command = "acd-eval";
    m.experiment = "acd-eval";
    AcdEvalSettings copy = s;
    copy.model = absolute_path(copy.model);
    for (auto& d : copy.data) d = absolute_path(d);
    m.config = to_json(copy);
    m.output_directory = absolute_path(out);
    record_input(m, copy.model);
    for (const auto& d : copy.data) record_input(m, d);
    return m;
}

inline Manifest make_report_manifest(const ReportSettings& s, const std::string& out) {
    if (s.runs.empty()) throw UsageError("--runs needs at least one run directory");
    Manifest m;
    m.command = "report";
    m.experiment = "report";
    ReportSettings copy = s;
    for (auto& r : copy.runs) r = absolute_path(r);
    m.config = to_json(copy);
    m.output_directory = absolute_path(out);
    for (const auto& r : copy.runs) record_input(m, r);
    return m;
}

// ---------------------------------------------------------------- train

struct SeedSummary {
    std::uint64_t seed = 0;
    double final_return_mean = 0.0;  // mean of the last three evaluation points
    double balance_index = 0.0;
    std::vector<double> behaviour_returns;
};

// Greedy episodes after training, annotated for behaviour metrics.
inline metrics::BehaviourRecord behaviour_rollouts(const envs::EnvSpec& spec, std::vector<marl::AgentLearner>& learners,
                                                   int episodes, std::uint64_t seed) {
    metrics::BehaviourRecord total;
    total.agents.assign(static_cast<std::size_t>(spec.n_agents), {});
    std::mt19937_64 unused(seed);
    for (int k = 0; k < episodes; ++k) {
        auto ep = marl::run_episode(spec, learners, derive_seed(seed, 14, static_cast<std::uint64_t>(k)), 0.0, unused);
        metrics::merge_into(total, metrics::attribute_events(ep));
    }
    return total;
}

inline double final_window_mean(const std::vector<marl::LogRow>& log, std::size_t window = 3) {
    const std::size_t n = std::min(window, log.size());
    double s = 0.0;
    for (std::size_t k = log.size() - n; k < log.size(); ++k) s += log[k].eval_return_mean;
    return n ? s / static_cast<double>(n) : 0.0;
}

inline void run_train(const Manifest& m, const RunOptions& opt) {
    TrainSettings s = train_settings_from_json(m.config);
    s.seeds = m.seeds;
    validate(s);
    const envs::EnvSpec spec = envs::make_spec(s.run.env_id);
    const fs::path out(m.output_directory);
    std::mutex log_mu;
    auto say = [&](const std::string& line) {
        if (!opt.log) return;
        std::lock_guard<std::mutex> lock(log_mu);
        opt.log(line);
    };
    if (s.run.trainer == marl::Trainer::acd_marl) {
        auto probe = acd::load_model(s.encoder);
        if (probe.env_id != spec.id)
            throw ConfigError("encoder was trained on " + probe.env_id + ", not " + spec.id);
        (void)acd::episode_masker(spec, probe.model);
    }

    std::vector<std::vector<marl::LogRow>> logs(s.seeds.size());
    detail::parallel_for(s.seeds.size(), opt.jobs, [&](std::size_t k) {
        const std::uint64_t seed = s.seeds[k];
        marl::TrainConfig cfg = s.run;
        cfg.seed = seed;
        marl::TrainHooks hooks;
        hooks.progress = [&, seed](const std::string& line) { say("seed " + std::to_string(seed) + " " + line); };
        acd::LoadedModel encoder;
        if (cfg.trainer == marl::Trainer::acd_marl) {
            encoder = acd::load_model(s.encoder);
            hooks.episode_masker = acd::episode_masker(spec, encoder.model);
        }
        marl::TrainResult res = marl::train(cfg, hooks);

        const fs::path dir = out / detail::seed_dir_name(seed);
        fs::create_directories(dir / "checkpoint");
        marl::write_train_log((dir / "train_log.csv").string(), res.log, spec.n_agents);
        marl::save_learners((dir / "checkpoint").string(), res.learners, seed);
        detail::write_text(dir / "checkpoint" / "policy.json",
                           json{{"env", spec.id}, {"hidden", cfg.learner.hidden}, {"agents", spec.n_agents}}.dump(2) +
                               "\n");

        auto beh = behaviour_rollouts(spec, res.learners, s.behaviour_episodes, seed);
        detail::write_behaviour_csv(dir / "behaviour.csv", beh);
        json summary;
        summary["seed"] = seed;
        summary["steps"] = res.steps;
        summary["episodes"] = res.episodes;
        summary["final_return_mean"] = final_window_mean(res.log);
        summary["final_win_rate"] = res.log.back().win_rate;
        summary["behaviour_episodes"] = s.behaviour_episodes;
        summary["behaviour_returns"] = beh.returns;
        summary["behaviour_win_rate"] =
            beh.wins.empty() ? 0.0
                             : static_cast<double>(std::count(beh.wins.begin(), beh.wins.end(), 1)) /
                                   static_cast<double>(beh.wins.size());
        summary["balance_index"] = metrics::balance_index(beh);
        detail::write_text(dir / "summary.json", summary.dump(2) + "\n");
        logs[k] = std::move(res.log);
    });

    std::vector<metrics::Series> ret, win;
    for (const auto& log : logs) {
        metrics::Series a, b;
        for (const auto& row : log) {
            a.push_back({row.step, row.eval_return_mean});
            b.push_back({row.step, row.win_rate});
        }
        ret.push_back(std::move(a));
        win.push_back(std::move(b));
    }
    auto cr = metrics::aggregate_curves(ret);
    auto cw = metrics::aggregate_curves(win);
    for (const auto& w : cr.warnings) say("warning: " + w);
    metrics::write_curve_csv((out / "curve.csv").string(), "eval_return", cr);
    metrics::write_curve_csv((out / "curve.csv").string(), "win_rate", cw, true);
}

inline SeedSummary read_seed_summary(const fs::path& seed_dir) {
    json j = detail::read_json(seed_dir / "summary.json");
    try {
        return {j.at("seed").get<std::uint64_t>(), j.at("final_return_mean").get<double>(),
                j.at("balance_index").get<double>(), j.at("behaviour_returns").get<std::vector<double>>()};
    } catch (const json::exception& e) {
        throw FormatError(seed_dir.string() + "/summary.json: " + e.what());
    }
}

// ---------------------------------------------------------------- collect

struct CollectOutcome {
    int kept = 0;
    int attempts = 0;
    double win_rate = 0.0;
};

// Policy factory for a checkpoint directory written by `train`.
inline std::function<envs::JointPolicy(std::uint64_t)> checkpoint_policy(const envs::EnvSpec& spec,
                                                                         const std::string& dir,
                                                                         std::vector<marl::AgentLearner>& learners) {
    json meta = detail::read_json(fs::path(dir) / "policy.json");
    std::string env;
    int hidden = 0;
    try {
        env = meta.at("env").get<std::string>();
        hidden = meta.at("hidden").get<int>();
    } catch (const json::exception& e) {
        throw FormatError(dir + "/policy.json: " + e.what());
    }
    if (env != spec.id) throw ConfigError("policy in " + dir + " was trained on " + env + ", not " + spec.id);
    marl::LearnerConfig lc;
    lc.hidden = hidden;
    learners.clear();
    for (int i = 0; i < spec.n_agents; ++i) learners.emplace_back(i, spec.obs_dim(), spec.n_actions(), lc, 0);
    marl::load_learners(dir, learners);
    return [&learners, spec](std::uint64_t) -> envs::JointPolicy {
        auto hidden_state = std::make_shared<std::vector<nn::Matrix>>();
        for (auto& l : learners) hidden_state->push_back(nn::Matrix::Zero(1, l.online.hidden_width()));
        auto prev = std::make_shared<std::vector<int>>(static_cast<std::size_t>(spec.n_agents), -1);
        auto rng = std::make_shared<std::mt19937_64>(0);
        return [&learners, hidden_state, prev, rng](const std::vector<envs::Observation>& obs, int) {
            std::vector<int> joint(obs.size());
            for (std::size_t i = 0; i < obs.size(); ++i) {
                auto c = marl::select_action(learners[i], obs[i], (*prev)[i], (*hidden_state)[i], 0.0, *rng);
                (*hidden_state)[i] = std::move(c.hidden);
                joint[i] = c.action;
            }
            *prev = joint;
            return joint;
        };
    };
}

inline CollectOutcome run_collect(const Manifest& m, const RunOptions& opt) {
    CollectSettings s = collect_settings_from_json(m.config);
    const envs::EnvSpec spec = envs::make_spec(s.env_id);
    std::vector<marl::AgentLearner> learners;
    std::function<envs::JointPolicy(std::uint64_t)> policy_for;
    if (s.policy == "scripted") {
        policy_for = [&spec](std::uint64_t ep_seed) -> envs::JointPolicy {
            auto pol = std::make_shared<envs::ScriptedPolicy>(spec, ep_seed);
            return [pol](const std::vector<envs::Observation>& obs, int) { return pol->act_all(obs); };
        };
    } else {
        policy_for = checkpoint_policy(spec, s.policy, learners);
    }
    CollectOutcome res;
    auto eps = acd::collect_winning(spec, policy_for, s.episodes, s.seed, s.max_attempts, &res.attempts);
    res.kept = static_cast<int>(eps.size());
    res.win_rate = res.attempts ? static_cast<double>(res.kept) / res.attempts : 0.0;
    const fs::path out(m.output_directory);
    envs::write_episodes((out / "episodes.jsonl").string(), eps);
    json summary{{"env", spec.id}, {"episodes", res.kept}, {"attempts", res.attempts}, {"win_rate", res.win_rate}};
    detail::write_text(out / "collection.json", summary.dump(2) + "\n");
    if (opt.log)
        opt.log("collected " + std::to_string(res.kept) + " winning episodes in " + std::to_string(res.attempts) +
                " rollouts, win rate " + marl::format_double(res.win_rate));
    return res;
}

// ---------------------------------------------------------------- acd

inline acd::ConfusionReport run_acd(const Manifest& m, const RunOptions& opt) {
    AcdSettings s = acd_settings_from_json(m.config);
    auto eps = detail::read_all_episodes(s.data);
    const envs::EnvSpec spec = detail::dataset_spec(eps);
    if (eps.size() < 5) throw ConfigError("need at least 5 episodes for an 80/20 split");
    auto [train_set, held_out] = acd::split_80_20(acd::to_samples(spec, eps));
    acd::AcdConfig cfg = acd::config_for(spec);
    if (s.sigma > 0.0) cfg.variance = s.sigma;
    acd::AcdTrainConfig tc;
    tc.epochs = s.epochs;
    tc.batch = s.batch;
    tc.seed = s.seed;
    tc.grad_clip = s.grad_clip;
    tc.optimizer.learning_rate = s.learning_rate;
    auto res = acd::train_acd(train_set, cfg, tc, [&](const acd::EpochLoss& e) {
        if (opt.log)
            opt.log("epoch " + std::to_string(e.epoch) + " elbo " + marl::format_double(e.total) + " nll " +
                    marl::format_double(e.nll) + " kl " + marl::format_double(e.kl));
    });
    const fs::path out(m.output_directory);
    acd::save_model(out.string(), res.model, spec.id, s.seed);
    acd::write_loss_curve((out / "loss_curve.csv").string(), res.curve);
    auto report = acd::evaluate_accuracy(acd::model_predictor(res.model), held_out);
    detail::write_accuracy_csv(out / "accuracy.csv", spec.id, report);
    return report;
}

inline acd::ConfusionReport run_acd_eval(const Manifest& m, const RunOptions&) {
    AcdEvalSettings s = acd_eval_settings_from_json(m.config);
    auto loaded = acd::load_model(s.model);
    auto eps = detail::read_all_episodes(s.data);
    const envs::EnvSpec spec = detail::dataset_spec(eps);
    if (spec.id != loaded.env_id) throw ConfigError("model was trained on " + loaded.env_id + ", data is " + spec.id);
    auto report = acd::evaluate_accuracy(acd::model_predictor(loaded.model), acd::to_samples(spec, eps));
    detail::write_accuracy_csv(fs::path(m.output_directory) / "accuracy.csv", spec.id, report);
    return report;
}

// ---------------------------------------------------------------- report

struct RunData {
    std::string dir;
    std::string label;
    std::string env;
    std::vector<std::vector<marl::LogRow>> logs;
    std::vector<SeedSummary> seeds;
    std::vector<metrics::BehaviourRecord> behaviour;
};

inline RunData load_run(const std::string& dir) {
    Manifest m = read_manifest(manifest_path(dir));
    if (m.command != "train") throw ConfigError(dir + " is not a training run");
    RunData r;
    r.dir = dir;
    r.label = m.experiment;
    r.env = train_settings_from_json(m.config).run.env_id;
    for (auto seed : m.seeds) {
        const fs::path sd = fs::path(dir) / detail::seed_dir_name(seed);
        r.logs.push_back(marl::read_train_log((sd / "train_log.csv").string()));
        r.seeds.push_back(read_seed_summary(sd));
        r.behaviour.push_back(detail::read_behaviour_csv(sd / "behaviour.csv"));
    }
    return r;
}

inline std::vector<std::int64_t> grid_of(const std::vector<marl::LogRow>& log) {
    std::vector<std::int64_t> g;
    for (const auto& row : log) g.push_back(row.step);
    return g;
}

inline void run_report(const Manifest& m, const RunOptions&) {
    ReportSettings s = report_settings_from_json(m.config);
    if (s.runs.empty()) throw UsageError("no runs to report");
    std::vector<RunData> runs;
    for (const auto& d : s.runs) runs.push_back(load_run(d));
    // labels must be unique inside a figure
    std::map<std::string, int> seen;
    for (auto& r : runs)
        if (seen[r.label]++ > 0) r.label += "#" + std::to_string(seen[r.label]);

    std::map<std::string, std::vector<const RunData*>> by_env;
    for (const auto& r : runs) by_env[r.env].push_back(&r);

    // every log of one environment must share the evaluation grid
    std::string offending;
    for (const auto& [env, rs] : by_env) {
        const auto ref = grid_of(rs.front()->logs.front());
        for (const auto* r : rs)
            for (const auto& log : r->logs)
                if (grid_of(log) != ref) {
                    offending += (offending.empty() ? "" : "; ") + r->dir + " vs " + rs.front()->dir;
                    break;
                }
    }
    if (!offending.empty()) throw IncompatibleRunsError("evaluation grids differ: " + offending);

    const fs::path out(m.output_directory);
    std::ostringstream balance;
    balance << "env,run,seeds,balance_mean,balance_ci95,final_return_mean,final_return_ci95\n";
    for (const auto& [env, rs] : by_env) {
        std::vector<metrics::LabelledCurve> ret_curves, win_curves;
        std::vector<metrics::BarGroup> bars;
        std::ostringstream beh;
        beh << "run,agent,contributions_per_episode,distance_per_episode\n";
        bool first = true;
        for (const auto* r : rs) {
            std::vector<metrics::Series> ret, win;
            for (const auto& log : r->logs) {
                metrics::Series a, b;
                for (const auto& row : log) {
                    a.push_back({row.step, row.eval_return_mean});
                    b.push_back({row.step, row.win_rate});
                }
                ret.push_back(std::move(a));
                win.push_back(std::move(b));
            }
            auto cr = metrics::aggregate_curves(ret), cw = metrics::aggregate_curves(win);
            metrics::write_curve_csv((out / (env + "_return.csv")).string(), r->label, cr, !first);
            metrics::write_curve_csv((out / (env + "_win_rate.csv")).string(), r->label, cw, !first);
            first = false;
            ret_curves.push_back({r->label, cr});
            win_curves.push_back({r->label, cw});

            metrics::BehaviourRecord total;
            long episodes = 0;
            for (std::size_t k = 0; k < r->behaviour.size(); ++k) {
                metrics::merge_into(total, r->behaviour[k]);
                episodes += static_cast<long>(r->seeds[k].behaviour_returns.size());
            }
            const double per = episodes > 0 ? 1.0 / static_cast<double>(episodes) : 0.0;
            metrics::BarGroup g{r->label, {}};
            for (std::size_t i = 0; i < total.agents.size(); ++i) {
                const double c = static_cast<double>(total.contributions(i)) * per;
                g.values.push_back(c);
                beh << r->label << "," << i << "," << marl::format_double(c) << ","
                    << marl::format_double(total.agents[i].distance * per) << "\n";
            }
            bars.push_back(std::move(g));

            std::vector<double> bal, fin;
            for (const auto& sd : r->seeds) {
                bal.push_back(sd.balance_index);
                fin.push_back(sd.final_return_mean);
            }
            balance << env << "," << r->label << "," << r->seeds.size() << "," << marl::format_double(metrics::mean(bal))
                    << "," << marl::format_double(metrics::ci95_halfwidth(bal)) << ","
                    << marl::format_double(metrics::mean(fin)) << "," << marl::format_double(metrics::ci95_halfwidth(fin))
                    << "\n";
        }
        metrics::write_curve_svg((out / (env + "_return.svg")).string(), env + ": evaluation return", ret_curves);
        metrics::write_curve_svg((out / (env + "_win_rate.svg")).string(), env + ": win rate", win_curves);
        detail::write_text(out / (env + "_behaviour.csv"), beh.str());
        metrics::write_bar_svg((out / (env + "_behaviour.svg")).string(), env + ": contributions per agent per episode",
                               bars);
    }
    detail::write_text(out / "balance.csv", balance.str());
}

// ---------------------------------------------------------------- dispatch

// Runs the experiment a manifest describes. The manifest must already be on
// disk (see claim_output).
inline void execute(const Manifest& m, const RunOptions& opt = {}) {
    if (!fs::exists(manifest_path(m.output_directory)))
        throw UsageError("manifest must be written before the experiment runs");
    if (m.code_version != kCodeVersion && opt.log)
        opt.log("warning: manifest was written by code version " + m.code_version + ", running " + kCodeVersion);
    check_inputs(m);
    if (m.command == "train") run_train(m, opt);
    else if (m.command == "collect") (void)run_collect(m, opt);
    else if (m.command == "acd") (void)run_acd(m, opt);
    else if (m.command == "acd-eval") (void)run_acd_eval(m, opt);
    else if (m.command == "report") run_report(m, opt);
    else throw FormatError("manifest names unknown command '" + m.command + "'");
}

// Re-executes an experiment from its manifest into the same directory.
inline Manifest rerun(const std::string& manifest_file, const RunOptions& opt = {}) {
    Manifest m = claim_output(read_manifest(manifest_file));
    execute(m, opt);
    return m;
}

}  // namespace cmarl::harness
