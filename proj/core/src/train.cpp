#include "metatask/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "metatask/errors.hpp"

namespace metatask {

Algo algo_parse(const std::string& name) {
    if (name == "maml") return Algo::Maml;
    if (name == "protonet") return Algo::ProtoNet;
    throw ValidationError("unknown algorithm '" + name + "' (expected maml or protonet)");
}

std::string algo_name(Algo a) { return a == Algo::Maml ? "maml" : "protonet"; }

void TrainConfig::validate() const {
    if (!(meta_lr > 0.0)) throw ValidationError("train config: meta_lr must be > 0");
    if (meta_batch_size == 0) throw ValidationError("train config: meta_batch_size must be >= 1");
    regime.validate();
}

namespace {

struct EpisodeGradient {
    std::vector<Mat> grads;
    double loss = 0.0;
    double accuracy = 0.0;
};

EpisodeGradient protonet_episode_gradient(const ModelParams& params, const Episode& episode) {
    Tape tape;
    const TapeParams p = place_on_tape(tape, params);
    const ProtoNetEpisodeLoss r = protonet_episode_loss(tape, params.config, p, episode);
    EpisodeGradient out;
    out.loss = tape.value(r.loss)(0, 0);
    out.accuracy = r.accuracy;
    const auto grad_nodes = tape.gradient(r.loss, p.nodes);
    out.grads.reserve(grad_nodes.size());
    for (const Tape::NodeId g : grad_nodes) out.grads.push_back(tape.value(g));
    return out;
}

}  // namespace

TrainResult meta_train(Algo algo, const Dataset& data, const ClassPool& pool,
                       const EpisodeConfig& episode_cfg, const MlpConfig& mlp_cfg,
                       const TrainConfig& train_cfg, const MamlOptions& maml_options) {
    episode_cfg.validate();
    train_cfg.validate();
    if (algo == Algo::Maml) {
        maml_options.validate();
        if (mlp_cfg.output_dim != episode_cfg.n_way) {
            throw ValidationError("maml: mlp output_dim must equal n_way");
        }
    }

    TrainResult result;
    result.params = ModelParams::init(mlp_cfg);
    result.log.reserve(train_cfg.n_iterations);
    const Rng base(train_cfg.seed);

    for (std::size_t iter = 0; iter < train_cfg.n_iterations; ++iter) {
        const auto batch =
            sample_batch(data, pool, episode_cfg, train_cfg.regime, train_cfg.meta_batch_size,
                         base, static_cast<std::uint64_t>(iter) * train_cfg.meta_batch_size);

        std::vector<Mat> mean_grads;
        double loss_sum = 0.0;
        double acc_sum = 0.0;
        std::size_t hard = 0;
        // Fixed episode order keeps the reduction deterministic.
        for (const Episode& episode : batch) {
            EpisodeGradient g;
            try {
                if (algo == Algo::ProtoNet) {
                    g = protonet_episode_gradient(result.params, episode);
                } else {
                    const MamlMetaGradient mg =
                        maml_meta_gradient(MamlState{result.params, maml_options}, episode);
                    g = {mg.grads, mg.query_loss, mg.query_accuracy};
                }
            } catch (const DivergenceError& e) {
                throw DivergenceError(std::string(e.what()) + " (meta-training iteration " +
                                          std::to_string(iter) + ")",
                                      iter);
            }
            loss_sum += g.loss;
            acc_sum += g.accuracy;
            if (episode.is_hard) ++hard;
            if (mean_grads.empty()) {
                mean_grads = std::move(g.grads);
            } else {
                for (std::size_t i = 0; i < mean_grads.size(); ++i) mean_grads[i] += g.grads[i];
            }
        }
        const double scale = 1.0 / static_cast<double>(batch.size());
        for (Mat& g : mean_grads) g *= scale;
        const double mean_loss = loss_sum * scale;
        if (!std::isfinite(mean_loss)) {
            throw DivergenceError("meta-training diverged (non-finite loss) at iteration " +
                                      std::to_string(iter),
                                  iter);
        }

        result.params = sgd_step(result.params, mean_grads, train_cfg.meta_lr);
        result.log.push_back({iter, mean_loss, acc_sum * scale,
                              static_cast<double>(hard) / static_cast<double>(batch.size())});
    }
    return result;
}

void write_train_log_csv(const std::vector<TrainLogRow>& log,
                         const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write training log '" + path.string() + "'");
    out << "iteration,loss,accuracy,hard_fraction_in_batch\n";
    out << std::fixed << std::setprecision(6);
    for (const TrainLogRow& row : log) {
        out << row.iteration << ',' << row.loss << ',' << row.accuracy << ','
            << row.hard_fraction << '\n';
    }
}

}  // namespace metatask
