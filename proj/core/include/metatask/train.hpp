#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "metatask/episode.hpp"
#include "metatask/maml.hpp"
#include "metatask/protonet.hpp"

namespace metatask {

enum class Algo { Maml, ProtoNet };

Algo algo_parse(const std::string& name);  // "maml" | "protonet"
std::string algo_name(Algo a);

/// Outer-loop schedule. The outer optimizer is plain gradient descent on the
/// mean episode loss of each meta-batch.
struct TrainConfig {
    double meta_lr = 0.05;
    std::size_t meta_batch_size = 4;
    std::size_t n_iterations = 6000;
    Regime regime = Regime::mixed(0.5);
    std::uint64_t seed = 4;

    void validate() const;
};

struct TrainLogRow {
    std::size_t iteration;   // 0-based
    double loss;             // mean episode loss of the meta-batch
    double accuracy;         // mean episode query accuracy
    double hard_fraction;    // fraction of hard episodes in the batch
};

struct TrainResult {
    ModelParams params;
    std::vector<TrainLogRow> log;
};

/// Meta-trains from a fresh initialization (MlpConfig.seed) over episodes
/// drawn from `pool` under the configured regime. Episode i of iteration t
/// uses the stream derived from (train seed, t*batch+i). Deterministic under
/// fixed seeds; aborts with DivergenceError (carrying the iteration) if a
/// meta-batch loss turns non-finite.
TrainResult meta_train(Algo algo, const Dataset& data, const ClassPool& pool,
                       const EpisodeConfig& episode_cfg, const MlpConfig& mlp_cfg,
                       const TrainConfig& train_cfg, const MamlOptions& maml_options);

/// CSV: header "iteration,loss,accuracy,hard_fraction_in_batch", 6-decimal values.
void write_train_log_csv(const std::vector<TrainLogRow>& log, const std::filesystem::path& path);

}  // namespace metatask
