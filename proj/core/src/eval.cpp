#include "metatask/eval.hpp"

#include <cmath>
#include <future>
#include <thread>

#include "metatask/errors.hpp"

namespace metatask {

void SweepConfig::validate() const {
    if (p_values.empty()) throw ValidationError("sweep config: p_values must be non-empty");
    for (const double p : p_values) {
        if (!(p >= 0.0) || !(p <= 1.0)) {
            throw ValidationError("sweep config: p_values must lie in [0, 1]");
        }
    }
    if (n_tasks < 2) throw ValidationError("sweep config: n_tasks must be >= 2");
}

TaskScorer make_scorer(Algo algo, const ModelParams& params, const MamlOptions& maml_options) {
    if (algo == Algo::ProtoNet) {
        ProtoNetState state{params};
        return [state](const Episode& ep) { return protonet_evaluate(state, ep).accuracy; };
    }
    MamlState state{params, maml_options};
    return [state](const Episode& ep) { return maml_evaluate(state, ep).accuracy; };
}

PointEstimate confidence_interval(std::span<const double> values) {
    if (values.size() < 2) {
        throw ValidationError("confidence_interval: need at least two values");
    }
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (const double v : values) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const double half_width = 1.96 * sd / std::sqrt(n);
    return {mean, mean - half_width, mean + half_width, values.size()};
}

PointEstimate evaluate_point(const TaskScorer& scorer, const Dataset& data, const ClassPool& pool,
                             const EpisodeConfig& cfg, double p_hard, std::size_t n_tasks,
                             const Rng& base, std::size_t jobs) {
    if (n_tasks < 2) throw ValidationError("evaluate_point: n_tasks must be >= 2");
    const Regime regime = Regime::mixed(p_hard);
    regime.validate();

    std::vector<double> accs(n_tasks);
    auto score_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            Rng task_rng = base.derive(t);
            const Episode ep = sample_task(data, pool, cfg, regime, task_rng);
            accs[t] = scorer(ep);
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n_tasks));
    if (workers == 1) {
        score_range(0, n_tasks);
    } else {
        // Per-task streams make the split order-free; accs is written by index.
        std::vector<std::future<void>> futures;
        const std::size_t chunk = (n_tasks + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            const std::size_t end = std::min(n_tasks, begin + chunk);
            if (begin >= end) break;
            futures.push_back(std::async(std::launch::async, score_range, begin, end));
        }
        for (auto& f : futures) f.get();
    }
    return confidence_interval(accs);
}

EvalReport run_sweep(const std::vector<SweepModel>& models, const Dataset& data,
                     const EpisodeConfig& episode_cfg, const SweepConfig& sweep_cfg) {
    if (models.empty()) throw ValidationError("run_sweep: at least one model required");
    episode_cfg.validate();
    sweep_cfg.validate();
    const ClassPool pool = sweep_cfg.use_test_clusters ? ClassPool::test_split(data)
                                                       : ClassPool::all(data);
    const Rng sweep_rng(sweep_cfg.seed);

    EvalReport report;
    report.rows.reserve(models.size() * sweep_cfg.p_values.size());
    for (const SweepModel& model : models) {
        for (std::size_t pi = 0; pi < sweep_cfg.p_values.size(); ++pi) {
            const double p = sweep_cfg.p_values[pi];
            // The episode stream depends only on (sweep seed, p index, task
            // index): models at the same p see identical tasks.
            const Rng base = sweep_rng.derive(pi);
            const PointEstimate est = evaluate_point(model.scorer, data, pool, episode_cfg, p,
                                                     sweep_cfg.n_tasks, base, sweep_cfg.jobs);
            report.rows.push_back({model.algo, model.train_regime, p, est.mean, est.ci_low,
                                   est.ci_high, est.n_tasks});
        }
    }
    return report;
}

double centroid_baseline_accuracy(const Episode& episode) {
    const std::size_t n_way = episode.n_way();
    if (n_way == 0 || episode.n_support() % n_way != 0) {
        throw ValidationError("centroid_baseline_accuracy: malformed episode");
    }
    const std::size_t k_shot = episode.n_support() / n_way;
    const Mat support = episode_matrix(episode.support_x, episode.dim);
    const Mat query = episode_matrix(episode.query_x, episode.dim);

    Mat centroids = Mat::Zero(static_cast<Eigen::Index>(n_way), support.cols());
    for (std::size_t i = 0; i < episode.n_support(); ++i) {
        centroids.row(episode.support_y[i]) += support.row(static_cast<Eigen::Index>(i));
    }
    centroids /= static_cast<double>(k_shot);

    std::size_t correct = 0;
    for (Eigen::Index q = 0; q < query.rows(); ++q) {
        Eigen::Index best = 0;
        double best_d = (query.row(q) - centroids.row(0)).squaredNorm();
        for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
            const double d = (query.row(q) - centroids.row(c)).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        if (best == episode.query_y[static_cast<std::size_t>(q)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(query.rows());
}

}  // namespace metatask
