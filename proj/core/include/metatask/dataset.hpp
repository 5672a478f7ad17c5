#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "metatask/hierarchy.hpp"

namespace metatask {

/// Generation parameters for the synthetic hierarchical embedding dataset.
///
/// Feature space layout: the leading cluster_dims coordinates carry the
/// cluster identity (cluster centers drawn with scale sigma_between, zero
/// elsewhere); the remaining coordinates carry the class identity (per-class
/// offsets drawn with scale sigma_within, zero elsewhere). Sample noise is
/// sigma_noise on class coordinates and sigma_noise * cluster_noise_scale on
/// cluster coordinates. Tasks whose classes share a cluster can therefore
/// only be separated through the low-scale class coordinates, while
/// cross-cluster tasks are separable through the high-scale cluster
/// coordinates alone.
struct DataConfig {
    std::size_t n_clusters = 15;
    std::size_t classes_per_cluster = 10;
    std::size_t samples_per_class = 100;
    std::size_t dim = 16;
    std::size_t cluster_dims = 8;
    double sigma_between = 2.0;
    double sigma_within = 0.55;
    double sigma_noise = 0.5;
    double cluster_noise_scale = 2.0;
    std::uint64_t seed = 1;

    /// Leading clusters form the meta-train split; the rest are held out for
    /// meta-test. Ignored when shared_class_split is true (then both phases
    /// sample from all classes).
    std::size_t train_clusters = 10;
    bool shared_class_split = false;

    std::size_t n_classes() const { return n_clusters * classes_per_cluster; }
    std::size_t n_rows() const { return n_classes() * samples_per_class; }

    void validate() const;  // throws ValidationError
};

/// Generated dataset. Feature rows are float32 so that the in-memory values
/// and the on-disk representation are bit-identical. Immutable once built.
struct Dataset {
    DataConfig config;
    std::size_t n_rows = 0;
    std::size_t dim = 0;
    std::vector<float> features;                 // row-major [n_rows x dim]
    std::vector<std::int32_t> class_of_sample;   // size n_rows
    std::vector<std::int32_t> cluster_of_class;  // size n_classes
    std::vector<std::string> class_names;        // synset ids when built from a manifest

    std::size_t n_classes() const { return cluster_of_class.size(); }
    std::size_t samples_per_class() const { return config.samples_per_class; }
    const float* row(std::size_t r) const { return features.data() + r * dim; }
    std::size_t row_index(std::size_t class_index, std::size_t sample) const {
        return class_index * config.samples_per_class + sample;
    }
    std::string class_label(std::size_t class_index) const;

    /// Binary file: little-endian u32 header {n_rows, dim, n_classes,
    /// n_clusters} followed by float32 rows. The sidecar JSON carries labels,
    /// the cluster mapping and the generating config.
    void save(const std::filesystem::path& bin_path,
              const std::filesystem::path& sidecar_path) const;
    static Dataset load(const std::filesystem::path& bin_path,
                        const std::filesystem::path& sidecar_path);
};

/// Draws the hierarchy of Gaussians described by cfg. Deterministic under
/// cfg.seed; single-threaded by construction.
Dataset generate_dataset(const DataConfig& cfg);

/// As generate_dataset, with class indices bound 1:1 to the manifest's synset
/// ids (cluster i, class j -> manifest.clusters[i].classes[j]).
Dataset dataset_from_manifest(const ClusterManifest& manifest, const DataConfig& cfg);

}  // namespace metatask
