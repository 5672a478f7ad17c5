#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "metatask/dataset.hpp"
#include "metatask/rng.hpp"

namespace metatask {

/// Task-sampling regime: always-random, always-hard, or a Bernoulli mix.
struct Regime {
    enum class Kind { Random, Hard, Mixed };

    Kind kind = Kind::Mixed;
    double p_hard = 0.5;  // only meaningful for Mixed

    static Regime random() { return {Kind::Random, 0.0}; }
    static Regime hard() { return {Kind::Hard, 1.0}; }
    static Regime mixed(double p) { return {Kind::Mixed, p}; }

    /// "random", "hard", "mixed" or "mixed:<p>".
    static Regime parse(const std::string& text);
    std::string name() const;

    void validate() const;  // Mixed requires p_hard in [0, 1]
};

struct EpisodeConfig {
    std::size_t n_way = 5;
    std::size_t k_shot = 5;
    std::size_t q_query = 15;
    std::uint64_t seed = 2;

    void validate() const;
};

/// One N-way K-shot task. Labels are episode-local (0..n_way-1, the index
/// into `classes`); support and query rows are disjoint within every class.
struct Episode {
    std::vector<std::int32_t> classes;  // dataset class indices, size n_way
    std::size_t dim = 0;
    std::vector<float> support_x;            // row-major [n_way*k_shot x dim]
    std::vector<std::int32_t> support_y;     // size n_way*k_shot
    std::vector<std::int32_t> support_rows;  // dataset row per support example
    std::vector<float> query_x;              // row-major [n_way*q_query x dim]
    std::vector<std::int32_t> query_y;
    std::vector<std::int32_t> query_rows;
    bool is_hard = false;

    std::size_t n_way() const { return classes.size(); }
    std::size_t n_support() const { return support_y.size(); }
    std::size_t n_query() const { return query_y.size(); }
};

/// The classes (grouped by cluster) an episode may draw from: the meta-train
/// split, the held-out split, or everything.
class ClassPool {
public:
    static ClassPool train_split(const Dataset& data);
    static ClassPool test_split(const Dataset& data);
    static ClassPool all(const Dataset& data);

    const std::vector<std::int32_t>& classes() const { return classes_; }
    /// Clusters (ascending cluster id) with their member classes in the pool.
    const std::vector<std::vector<std::int32_t>>& clusters() const { return clusters_; }

private:
    ClassPool(const Dataset& data, bool train, bool test);
    std::vector<std::int32_t> classes_;
    std::vector<std::vector<std::int32_t>> clusters_;
};

/// n_way classes uniformly without replacement from the whole pool.
Episode sample_random_task(const Dataset& data, const ClassPool& pool, const EpisodeConfig& cfg,
                           Rng& rng);

/// Uniform cluster among those with >= n_way pool classes, then n_way classes
/// uniformly within it.
Episode sample_hard_task(const Dataset& data, const ClassPool& pool, const EpisodeConfig& cfg,
                         Rng& rng);

/// Dispatch by regime; Mixed draws one Bernoulli(p_hard) then delegates.
Episode sample_task(const Dataset& data, const ClassPool& pool, const EpisodeConfig& cfg,
                    const Regime& regime, Rng& rng);

/// batch_size independent episodes. Episode i uses the stream derived from
/// (base.seed, first_episode_index + i), so batches are reproducible
/// regardless of sampling order or concurrency.
std::vector<Episode> sample_batch(const Dataset& data, const ClassPool& pool,
                                  const EpisodeConfig& cfg, const Regime& regime,
                                  std::size_t batch_size, const Rng& base,
                                  std::uint64_t first_episode_index = 0);

/// Debug dump: class ids, cluster ids and dataset row indices as JSON.
void write_episode_json(const Episode& episode, const Dataset& data,
                        const std::filesystem::path& path);

}  // namespace metatask
