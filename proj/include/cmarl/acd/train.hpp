#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmarl/acd/model.hpp"
#include "cmarl/nn/checkpoint.hpp"
#include "cmarl/nn/rmsprop.hpp"
#include "cmarl/seed.hpp"

namespace cmarl::acd {

// Decoder noise level per family: tighter for the grid chasing tasks.
inline double default_variance(const envs::EnvSpec& spec) {
    return spec.family == envs::Family::skirmish ? 5e-3 : 5e-4;
}

inline AcdConfig config_for(const envs::EnvSpec& spec) {
    AcdConfig c;
    c.n_nodes = spec.n_nodes();
    c.T = spec.horizon;
    c.D = spec.obs_dim();
    c.variance = default_variance(spec);
    return c;
}

struct AcdTrainConfig {
    int epochs = 150;
    int batch = 128;
    std::uint64_t seed = 0;
    double grad_clip = 100.0;
    nn::RmspropConfig optimizer{};
};

struct EpochLoss {
    int epoch = 0;
    double total = 0.0;
    double nll = 0.0;
    double kl = 0.0;
};

struct AcdTrainResult {
    AcdModel model;
    std::vector<EpochLoss> curve;
};

inline AcdTrainResult train_acd(const std::vector<SeriesSample>& data, AcdConfig cfg, const AcdTrainConfig& tc,
                                const std::function<void(const EpochLoss&)>& on_epoch = {}) {
    if (data.empty()) throw UsageError("causal model training needs a nonempty dataset");
    for (const auto& s : data)
        if (s.n_nodes() != data.front().n_nodes() || s.T != data.front().T || s.D != data.front().D)
            throw ConfigError("dataset mixes sample shapes");
    if (tc.epochs <= 0 || tc.batch <= 0) throw ConfigError("epochs and batch must be positive");
    cfg.n_nodes = data.front().n_nodes();
    cfg.T = data.front().T;
    cfg.D = data.front().D;
    AcdTrainResult res{AcdModel(cfg), {}};
    AcdModel& m = res.model;
    std::mt19937_64 init_rng(derive_seed(tc.seed, 30));
    m.init(init_rng);
    std::mt19937_64 shuffle_rng(derive_seed(tc.seed, 31));
    std::mt19937_64 noise_rng(derive_seed(tc.seed, 32));
    nn::ParamSet params = m.params();
    nn::RmspropState opt(tc.optimizer);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    const int E = cfg.n_nodes * (cfg.n_nodes - 1);
    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        EpochLoss row{epoch, 0.0, 0.0, 0.0};
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch)) {
            std::vector<const SeriesSample*> batch;
            for (std::size_t k = start; k < std::min(order.size(), start + static_cast<std::size_t>(tc.batch)); ++k)
                batch.push_back(&data[order[k]]);
            Graph g;
            Matrix noise = nn::sample_gumbel(static_cast<Index>(batch.size()) * E, 2, noise_rng);
            ElboTerms t = elbo_forward(g, m, batch, noise);
            g.backward(t.total);
            params.clip_grad_norm(tc.grad_clip);
            nn::rmsprop_update(params, opt);
            const double w = static_cast<double>(batch.size());
            row.total += g.scalar(t.total) * w;
            row.nll += g.scalar(t.nll) * w;
            row.kl += g.scalar(t.kl) * w;
        }
        const double n = static_cast<double>(data.size());
        row.total /= n;
        row.nll /= n;
        row.kl /= n;
        res.curve.push_back(row);
        if (on_epoch) on_epoch(row);
    }
    return res;
}

struct ConfusionReport {
    long n_pairs = 0;
    long n_correct = 0;
    long n_fp = 0;
    long n_fn = 0;
    double correct = 0.0;  // percentages
    double fp = 0.0;
    double fn = 0.0;
};

using CausalPredictor = std::function<std::vector<std::uint8_t>(const SeriesSample&)>;

// Per (episode, agent) comparison against the ground-truth bits.
inline ConfusionReport evaluate_accuracy(const CausalPredictor& predict, const std::vector<SeriesSample>& held_out) {
    if (held_out.empty()) throw UsageError("accuracy over an empty set");
    ConfusionReport r;
    for (const auto& s : held_out) {
        auto c = predict(s);
        if (c.size() != s.ground_truth.size()) throw ConfigError("prediction length differs from ground truth");
        for (std::size_t i = 0; i < c.size(); ++i) {
            ++r.n_pairs;
            if (c[i] == s.ground_truth[i]) ++r.n_correct;
            else if (c[i]) ++r.n_fp;
            else ++r.n_fn;
        }
    }
    const double n = static_cast<double>(r.n_pairs);
    r.correct = 100.0 * static_cast<double>(r.n_correct) / n;
    r.fp = 100.0 * static_cast<double>(r.n_fp) / n;
    r.fn = 100.0 * static_cast<double>(r.n_fn) / n;
    return r;
}

inline CausalPredictor model_predictor(AcdModel& m) {
    return [&m](const SeriesSample& s) { return predict_c(m, s); };
}

inline void write_loss_curve(const std::string& path, const std::vector<EpochLoss>& curve) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write " + path);
    os << "epoch,total,nll,kl\n";
    char buf[128];
    for (const auto& r : curve) {
        std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g\n", r.epoch, r.total, r.nll, r.kl);
        os << buf;
    }
}

inline void save_model(const std::string& dir, AcdModel& m, const std::string& env_id, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    nn::save_checkpoint(dir + "/acd.ckpt", m.params(), seed);
    nlohmann::json j;
    const auto& c = m.config;
    j["env_id"] = env_id;
    j["N"] = c.n_nodes - 1;
    j["T"] = c.T;
    j["D"] = c.D;
    j["sigma"] = c.variance;
    j["temperature"] = c.temperature;
    j["encoder_hidden"] = c.encoder_hidden;
    j["decoder_hidden"] = c.decoder_hidden;
    j["message_width"] = c.message_width;
    std::ofstream os(dir + "/acd_model.json");
    if (!os) throw FormatError("cannot write model manifest in " + dir);
    os << j.dump(2) << "\n";
}

struct LoadedModel {
    std::string env_id;
    AcdModel model;
};

inline LoadedModel load_model(const std::string& dir) {
    std::ifstream is(dir + "/acd_model.json");
    if (!is) throw FormatError("cannot read model manifest in " + dir);
    LoadedModel out;
    AcdConfig c;
    try {
        nlohmann::json j = nlohmann::json::parse(is);
        out.env_id = j.at("env_id").get<std::string>();
        c.n_nodes = j.at("N").get<int>() + 1;
        c.T = j.at("T").get<int>();
        c.D = j.at("D").get<int>();
        c.variance = j.at("sigma").get<double>();
        c.temperature = j.at("temperature").get<double>();
        c.encoder_hidden = j.at("encoder_hidden").get<int>();
        c.decoder_hidden = j.at("decoder_hidden").get<int>();
        c.message_width = j.at("message_width").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model manifest: ") + e.what());
    }
    out.model = AcdModel(c);
    nn::apply_checkpoint(nn::load_checkpoint(dir + "/acd.ckpt"), out.model.params());
    return out;
}

// Per-episode causality bits for ACD-MARL from a trained model.
inline std::function<std::vector<std::uint8_t>(const envs::EpisodeRecord&)> episode_masker(const envs::EnvSpec& spec,
                                                                                         AcdModel& m) {
    if (m.config.n_nodes != spec.n_nodes() || m.config.T != spec.horizon)
        throw ConfigError("causal model expects " + std::to_string(m.config.n_nodes) + " nodes and T=" +
                          std::to_string(m.config.T) + ", environment " + spec.id + " has " +
                          std::to_string(spec.n_nodes()) + " and T=" + std::to_string(spec.horizon));
    return [spec, &m](const envs::EpisodeRecord& ep) {
        envs::EpisodeRecord copy = ep;
        copy.ground_truth.assign(static_cast<std::size_t>(ep.n_agents), 0);
        return predict_c(m, preprocess(make_sample(spec, copy)));
    };
}

} // namespace cmarl::acd
