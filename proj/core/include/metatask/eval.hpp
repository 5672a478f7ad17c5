#pragma once

#include <functional>
#include <string>
#include <vector>

#include "metatask/episode.hpp"
#include "metatask/maml.hpp"
#include "metatask/protonet.hpp"
#include "metatask/train.hpp"

namespace metatask {

/// Hard-task-probability sweep parameters.
struct SweepConfig {
    std::vector<double> p_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::size_t n_tasks = 1600;
    std::uint64_t seed = 5;
    bool use_test_clusters = true;  // evaluate on the held-out split
    std::size_t jobs = 1;           // worker threads inside evaluate_point

    void validate() const;
};

struct PointEstimate {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_tasks = 0;
};

struct EvalRow {
    std::string algo;
    std::string train_regime;
    double p_hard;
    double mean_acc;
    double ci_low;
    double ci_high;
    std::size_t n_tasks;
};

struct EvalReport {
    std::vector<EvalRow> rows;
};

/// Per-task accuracy of some model on one episode.
using TaskScorer = std::function<double(const Episode&)>;

/// A trained model (or baseline) entering the sweep.
struct SweepModel {
    std::string algo;          // "maml", "protonet", "oracle", ...
    std::string train_regime;  // "random", "hard", "mixed", "none", ...
    TaskScorer scorer;
};

TaskScorer make_scorer(Algo algo, const ModelParams& params, const MamlOptions& maml_options);

/// Mean accuracy with a 95% normal-approximation interval:
/// mean +- 1.96 * s / sqrt(n), s the (n-1)-denominator sample std.
PointEstimate confidence_interval(std::span<const double> values);

/// Scores n_tasks episodes drawn under Mixed(p_hard). Task t uses the stream
/// derived from (base.seed, t), so two models evaluated with the same base see
/// identical episode sequences. Tasks may be scored by `jobs` worker threads;
/// the reduction is performed in task order either way.
PointEstimate evaluate_point(const TaskScorer& scorer, const Dataset& data, const ClassPool& pool,
                             const EpisodeConfig& cfg, double p_hard, std::size_t n_tasks,
                             const Rng& base, std::size_t jobs = 1);

/// evaluate_point for every (model, p) pair; episode streams at a given p are
/// shared across models (paired evaluation).
EvalReport run_sweep(const std::vector<SweepModel>& models, const Dataset& data,
                     const EpisodeConfig& episode_cfg, const SweepConfig& sweep_cfg);

/// Nearest-class-centroid baseline in raw feature space: centroids from the
/// support set, queries classified by nearest centroid. No learning involved.
double centroid_baseline_accuracy(const Episode& episode);

}  // namespace metatask
