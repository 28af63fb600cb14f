#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cmarl/envs/spec.hpp"
#include "cmarl/harness/config.hpp"
#include "cmarl/harness/errors.hpp"
#include "cmarl/harness/manifest.hpp"
#include "cmarl/harness/pipelines.hpp"

using namespace cmarl;
using namespace cmarl::harness;

namespace {

struct TrainFlags {
    std::string env, trainer = "idql", out, encoder, name;
    std::vector<std::uint64_t> seeds;
    std::optional<std::int64_t> steps, eval_interval, anneal, episodes;
    std::optional<int> eval_episodes, batch, sync, hidden, behaviour_episodes;
    std::optional<double> lr, gamma;
    bool strict_mask = false, full_scale = false;
};

struct AcdFlags {
    std::vector<std::string> data;
    std::string out;
    AcdSettings s;
    std::string model;  // eval only
    std::vector<std::string> eval_data;
    std::string eval_out;
};

TrainSettings resolve(const TrainFlags& f) {
    TrainSettings s = default_train_settings(f.env, parse_trainer(f.trainer), f.full_scale ? Scale::full : Scale::desk);
    if (!f.seeds.empty()) s.seeds = f.seeds;
    if (f.steps) s.run.total_steps = *f.steps;
    if (f.episodes) s.run.max_episodes = *f.episodes;
    if (f.eval_interval) s.run.eval_interval = *f.eval_interval;
    if (f.eval_episodes) s.run.eval_episodes = *f.eval_episodes;
    if (f.batch) s.run.batch_episodes = *f.batch;
    if (f.sync) s.run.target_sync_episodes = *f.sync;
    if (f.anneal) s.run.epsilon.anneal_episodes = *f.anneal;
    if (f.hidden) s.run.learner.hidden = *f.hidden;
    if (f.lr) s.run.learner.optimizer.learning_rate = *f.lr;
    if (f.gamma) s.run.learner.gamma = *f.gamma;
    if (f.behaviour_episodes) s.behaviour_episodes = *f.behaviour_episodes;
    s.run.learner.strict_mask = f.strict_mask;
    s.encoder = f.encoder;
    return s;
}

void require(bool ok, const std::string& what) {
    if (!ok) throw UsageError(what);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Independent and causally masked multi-agent Q-learning experiments"};
    app.set_config("--config", "", "TOML/INI file whose keys mirror the flags; flags win");
    app.require_subcommand(1);
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool quiet = false;
    app.add_option("--jobs", jobs, "Seeds trained concurrently")->check(CLI::PositiveNumber);
    app.add_flag("--quiet", quiet, "No progress lines on stderr");

    const auto& envs_known = envs::known_env_ids();

    TrainFlags tf;
    auto* train = app.add_subcommand("train", "Train independent learners, one worker per seed");
    train->add_option("--env", tf.env, "Environment id")->required()->check(CLI::IsMember(envs_known));
    train->add_option("--trainer", tf.trainer, "idql | icl | acd-marl")->check(CLI::IsMember({"idql", "icl", "acd-marl"}));
    train->add_option("--seeds", tf.seeds, "Comma-separated seeds")->delimiter(',');
    train->add_option("--steps", tf.steps, "Environment steps per seed");
    train->add_option("--episodes", tf.episodes, "Stop after this many training episodes");
    train->add_option("--eval-interval", tf.eval_interval, "Environment steps between evaluations");
    train->add_option("--eval-episodes", tf.eval_episodes, "Greedy episodes per evaluation");
    train->add_option("--batch", tf.batch, "Episodes per minibatch");
    train->add_option("--sync", tf.sync, "Episodes between target syncs");
    train->add_option("--anneal", tf.anneal, "Episodes over which epsilon anneals");
    train->add_option("--hidden", tf.hidden, "GRU width");
    train->add_option("--lr", tf.lr, "RMSprop learning rate");
    train->add_option("--gamma", tf.gamma, "Discount");
    train->add_option("--behaviour-episodes", tf.behaviour_episodes, "Greedy episodes for behaviour metrics");
    train->add_option("--out", tf.out, "Output directory")->required();
    train->add_option("--encoder", tf.encoder, "ACD model directory (acd-marl)");
    train->add_option("--name", tf.name, "Experiment name (default <env>-<trainer>)");
    train->add_flag("--strict-mask", tf.strict_mask, "Mask the step penalty as well");
    train->add_flag("--full-scale", tf.full_scale, "Full-length schedule instead of desk scale");

    CollectSettings cs;
    std::string collect_out;
    auto* collect = app.add_subcommand("collect", "Gather winning episodes with ground-truth bits");
    collect->add_option("--env", cs.env_id, "Environment id")->required()->check(CLI::IsMember(envs_known));
    collect->add_option("--policy", cs.policy, "'scripted' or a checkpoint directory from train");
    collect->add_option("--episodes", cs.episodes, "Winning episodes to keep");
    collect->add_option("--seed", cs.seed, "Seed");
    collect->add_option("--max-attempts", cs.max_attempts, "Rollout budget (default max(200, 20*episodes))");
    collect->add_option("--out", collect_out, "Output directory")->required();

    AcdFlags af;
    auto* acd_cmd = app.add_subcommand("acd", "Train the causal discovery model");
    acd_cmd->require_subcommand(0, 1);
    acd_cmd->add_option("--data", af.data, "Episode files (JSONL)");
    acd_cmd->add_option("--epochs", af.s.epochs, "Epochs");
    acd_cmd->add_option("--batch", af.s.batch, "Samples per batch");
    acd_cmd->add_option("--sigma", af.s.sigma, "Decoder variance (default per environment)");
    acd_cmd->add_option("--seed", af.s.seed, "Seed");
    acd_cmd->add_option("--lr", af.s.learning_rate, "Learning rate");
    acd_cmd->add_option("--out", af.out, "Output directory");
    auto* acd_eval = acd_cmd->add_subcommand("eval", "Accuracy of a trained model against ground-truth bits");
    acd_eval->add_option("--model", af.model, "Model directory")->required();
    acd_eval->add_option("--data", af.eval_data, "Episode files (JSONL)")->required();
    acd_eval->add_option("--out", af.eval_out, "Output directory")->required();

    ReportSettings rs;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Curves, behaviour bars and balance table from training runs");
    report->add_option("--runs", rs.runs, "Training run directories");
    report->add_option("--out", report_out, "Output directory")->required();

    std::string rerun_target;
    auto* rerun_cmd = app.add_subcommand("rerun", "Re-execute an experiment from its manifest, in place");
    rerun_cmd->add_option("manifest", rerun_target, "manifest.json or the directory holding it")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << failure_line({exit_usage, "usage", e.what()}) << "\n";
        return exit_usage;
    }

    RunOptions opt;
    opt.jobs = jobs;
    if (!quiet) opt.log = [](const std::string& line) { std::cerr << line << "\n"; };

    try {
        if (*train) {
            Manifest m = claim_output(make_train_manifest(resolve(tf), tf.out, tf.name));
            execute(m, opt);
            std::cout << "wrote " << m.output_directory << "\n";
        } else if (*collect) {
            Manifest m = claim_output(make_collect_manifest(cs, collect_out));
            auto r = run_collect(m, opt);
            std::cout << "win_rate=" << marl::format_double(r.win_rate) << " episodes=" << r.kept
                      << " attempts=" << r.attempts << "\n";
        } else if (*acd_cmd) {
            if (*acd_eval) {
                Manifest m = claim_output(make_acd_eval_manifest({af.model, af.eval_data}, af.eval_out));
                check_inputs(m);
                auto r = run_acd_eval(m, opt);
                std::cout << "correct=" << marl::format_double(r.correct) << " fp=" << marl::format_double(r.fp)
                          << " fn=" << marl::format_double(r.fn) << " n_pairs=" << r.n_pairs << "\n";
            } else {
                require(!af.data.empty(), "acd needs --data");
                require(!af.out.empty(), "acd needs --out");
                af.s.data = af.data;
                Manifest m = claim_output(make_acd_manifest(af.s, af.out));
                check_inputs(m);
                auto r = run_acd(m, opt);
                std::cout << "correct=" << marl::format_double(r.correct) << " fp=" << marl::format_double(r.fp)
                          << " fn=" << marl::format_double(r.fn) << " n_pairs=" << r.n_pairs << "\n";
            }
        } else if (*report) {
            require(!rs.runs.empty(), "report needs at least one --runs directory");
            Manifest m = claim_output(make_report_manifest(rs, report_out));
            execute(m, opt);
            std::cout << "wrote " << m.output_directory << "\n";
        } else if (*rerun_cmd) {
            std::string path = rerun_target;
            if (std::filesystem::is_directory(path)) path = manifest_path(path);
            Manifest m = rerun(path, opt);
            std::cout << "reran " << m.output_directory << "\n";
        }
    } catch (...) {
        Failure f = classify(std::current_exception());
        std::cerr << failure_line(f) << "\n";
        return f.code;
    }
    return exit_ok;
}
