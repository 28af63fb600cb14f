#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmarl/acd/train.hpp"
#include "cmarl/envs/spec.hpp"
#include "cmarl/error.hpp"
#include "cmarl/marl/train.hpp"

namespace cmarl::harness {

using nlohmann::json;

enum class Scale { desk, full };

inline const char* scale_name(Scale s) { return s == Scale::full ? "full" : "desk"; }

inline Scale parse_scale(const std::string& s) {
    if (s == "desk") return Scale::desk;
    if (s == "full") return Scale::full;
    throw ConfigError("unknown scale '" + s + "'");
}

inline marl::Trainer parse_trainer(const std::string& s) {
    if (s == "idql") return marl::Trainer::idql;
    if (s == "icl") return marl::Trainer::icl;
    if (s == "acd-marl") return marl::Trainer::acd_marl;
    throw UsageError("unknown trainer '" + s + "'");
}

struct TrainSettings {
    marl::TrainConfig run;  // run.seed is replaced per worker
    std::vector<std::uint64_t> seeds;
    int behaviour_episodes = 50;
    std::string encoder;  // ACD model directory, acd-marl only
    Scale scale = Scale::desk;
};

// Desk scale keeps the optimiser settings and shrinks the schedule: 100k env
// steps, epsilon annealed over 500 episodes, minibatches of 16 episodes and a
// target sync every 50. Evaluation intervals keep the 4:1 ratio between the
// SMAC-3m analogue and the other tasks.
inline TrainSettings default_train_settings(const std::string& env_id, marl::Trainer trainer, Scale scale) {
    (void)envs::make_spec(env_id);
    const bool sk3 = env_id.starts_with("sk3");
    TrainSettings s;
    s.scale = scale;
    s.run.env_id = env_id;
    s.run.trainer = trainer;
    s.run.eval_episodes = 20;
    s.run.buffer_capacity = 5000;
    if (scale == Scale::full) {
        s.run.total_steps = 2000000;
        s.run.eval_interval = sk3 ? 2500 : 10000;
        s.run.batch_episodes = 32;
        s.run.target_sync_episodes = 200;
        s.run.epsilon.anneal_episodes = 50000;
        s.behaviour_episodes = 300;
        s.seeds = {1, 2, 3, 4, 5, 6};
    } else {
        s.run.total_steps = 100000;
        s.run.eval_interval = sk3 ? 1250 : 5000;
        s.run.batch_episodes = 16;
        s.run.target_sync_episodes = 50;
        s.run.epsilon.anneal_episodes = 500;
        s.behaviour_episodes = 50;
        s.seeds = {1, 2, 3};
    }
    return s;
}

inline json to_json(const TrainSettings& s) {
    const auto& r = s.run;
    json j;
    j["env"] = r.env_id;
    j["trainer"] = marl::trainer_name(r.trainer);
    j["scale"] = scale_name(s.scale);
    j["total_steps"] = r.total_steps;
    j["max_episodes"] = r.max_episodes;
    j["eval_interval"] = r.eval_interval;
    j["eval_episodes"] = r.eval_episodes;
    j["batch_episodes"] = r.batch_episodes;
    j["buffer_capacity"] = r.buffer_capacity;
    j["target_sync_episodes"] = r.target_sync_episodes;
    j["epsilon_start"] = r.epsilon.start;
    j["epsilon_end"] = r.epsilon.end;
    j["epsilon_anneal_episodes"] = r.epsilon.anneal_episodes;
    j["hidden"] = r.learner.hidden;
    j["gamma"] = r.learner.gamma;
    j["grad_clip"] = r.learner.grad_clip;
    j["strict_mask"] = r.learner.strict_mask;
    j["learning_rate"] = r.learner.optimizer.learning_rate;
    j["rmsprop_decay"] = r.learner.optimizer.decay;
    j["rmsprop_epsilon"] = r.learner.optimizer.epsilon;
    j["behaviour_episodes"] = s.behaviour_episodes;
    j["encoder"] = s.encoder;
    return j;
}

inline TrainSettings train_settings_from_json(const json& j) {
    try {
        TrainSettings s;
        auto& r = s.run;
        r.env_id = j.at("env").get<std::string>();
        r.trainer = parse_trainer(j.at("trainer").get<std::string>());
        s.scale = parse_scale(j.at("scale").get<std::string>());
        r.total_steps = j.at("total_steps").get<std::int64_t>();
        r.max_episodes = j.at("max_episodes").get<std::int64_t>();
        r.eval_interval = j.at("eval_interval").get<std::int64_t>();
        r.eval_episodes = j.at("eval_episodes").get<int>();
        r.batch_episodes = j.at("batch_episodes").get<int>();
        r.buffer_capacity = j.at("buffer_capacity").get<std::size_t>();
        r.target_sync_episodes = j.at("target_sync_episodes").get<int>();
        r.epsilon.start = j.at("epsilon_start").get<double>();
        r.epsilon.end = j.at("epsilon_end").get<double>();
        r.epsilon.anneal_episodes = j.at("epsilon_anneal_episodes").get<std::int64_t>();
        r.learner.hidden = j.at("hidden").get<int>();
        r.learner.gamma = j.at("gamma").get<double>();
        r.learner.grad_clip = j.at("grad_clip").get<double>();
        r.learner.strict_mask = j.at("strict_mask").get<bool>();
        r.learner.optimizer.learning_rate = j.at("learning_rate").get<double>();
        r.learner.optimizer.decay = j.at("rmsprop_decay").get<double>();
        r.learner.optimizer.epsilon = j.at("rmsprop_epsilon").get<double>();
        s.behaviour_episodes = j.at("behaviour_episodes").get<int>();
        s.encoder = j.at("encoder").get<std::string>();
        return s;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad train config: ") + e.what());
    }
}

inline void validate(const TrainSettings& s) {
    s.run.validate();
    if (s.seeds.empty()) throw UsageError("no seeds given");
    for (std::size_t a = 0; a < s.seeds.size(); ++a)
        for (std::size_t b = a + 1; b < s.seeds.size(); ++b)
            if (s.seeds[a] == s.seeds[b]) throw UsageError("seed " + std::to_string(s.seeds[a]) + " listed twice");
    if (s.behaviour_episodes < 0) throw ConfigError("behaviour_episodes must be non-negative");
    if (s.run.trainer == marl::Trainer::acd_marl && s.encoder.empty())
        throw UsageError("trainer acd-marl needs --encoder <model dir>");
    if (s.run.trainer != marl::Trainer::acd_marl && !s.encoder.empty())
        throw UsageError("--encoder only applies to trainer acd-marl");
}

struct CollectSettings {
    std::string env_id;
    std::string policy = "scripted";  // or a checkpoint directory
    int episodes = 1000;
    std::uint64_t seed = 1;
    int max_attempts = -1;  // default: max(200, 20 * episodes)
};

inline json to_json(const CollectSettings& s) {
    return json{{"env", s.env_id}, {"policy", s.policy}, {"episodes", s.episodes}, {"seed", s.seed},
                {"max_attempts", s.max_attempts}};
}

inline CollectSettings collect_settings_from_json(const json& j) {
    try {
        CollectSettings s;
        s.env_id = j.at("env").get<std::string>();
        s.policy = j.at("policy").get<std::string>();
        s.episodes = j.at("episodes").get<int>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.max_attempts = j.at("max_attempts").get<int>();
        return s;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad collect config: ") + e.what());
    }
}

struct AcdSettings {
    std::vector<std::string> data;
    int epochs = 150;
    int batch = 128;
    double sigma = 0.0;  // 0: per-environment default
    std::uint64_t seed = 1;
    double learning_rate = 5e-4;
    double grad_clip = 100.0;
};

inline json to_json(const AcdSettings& s) {
    return json{{"data", s.data},   {"epochs", s.epochs},
                {"batch", s.batch}, {"sigma", s.sigma},
                {"seed", s.seed},   {"learning_rate", s.learning_rate},
                {"grad_clip", s.grad_clip}};
}

inline AcdSettings acd_settings_from_json(const json& j) {
    try {
        AcdSettings s;
        s.data = j.at("data").get<std::vector<std::string>>();
        s.epochs = j.at("epochs").get<int>();
        s.batch = j.at("batch").get<int>();
        s.sigma = j.at("sigma").get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.learning_rate = j.at("learning_rate").get<double>();
        s.grad_clip = j.at("grad_clip").get<double>();
        return s;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad acd config: ") + e.what());
    }
}

struct AcdEvalSettings {
    std::string model;
    std::vector<std::string> data;
};

inline json to_json(const AcdEvalSettings& s) { return json{{"model", s.model}, {"data", s.data}}; }

inline AcdEvalSettings acd_eval_settings_from_json(const json& j) {
    try {
        return {j.at("model").get<std::string>(), j.at("data").get<std::vector<std::string>>()};
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad acd eval config: ") + e.what());
    }
}

struct ReportSettings {
    std::vector<std::string> runs;
};

inline json to_json(const ReportSettings& s) { return json{{"runs", s.runs}}; }

inline ReportSettings report_settings_from_json(const json& j) {
    try {
        return {j.at("runs").get<std::vector<std::string>>()};
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad report config: ") + e.what());
    }
}

} // namespace cmarl::harness
