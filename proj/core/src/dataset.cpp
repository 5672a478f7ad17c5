#include "metatask/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "metatask/errors.hpp"
#include "metatask/rng.hpp"

namespace metatask {

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw ValidationError("dataset file truncated while reading header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

nlohmann::ordered_json config_to_json(const DataConfig& c) {
    nlohmann::ordered_json j;
    j["n_clusters"] = c.n_clusters;
    j["classes_per_cluster"] = c.classes_per_cluster;
    j["samples_per_class"] = c.samples_per_class;
    j["dim"] = c.dim;
    j["cluster_dims"] = c.cluster_dims;
    j["sigma_between"] = c.sigma_between;
    j["sigma_within"] = c.sigma_within;
    j["sigma_noise"] = c.sigma_noise;
    j["cluster_noise_scale"] = c.cluster_noise_scale;
    j["seed"] = c.seed;
    j["train_clusters"] = c.train_clusters;
    j["shared_class_split"] = c.shared_class_split;
    return j;
}

DataConfig config_from_json(const nlohmann::json& j) {
    DataConfig c;
    c.n_clusters = j.at("n_clusters").get<std::size_t>();
    c.classes_per_cluster = j.at("classes_per_cluster").get<std::size_t>();
    c.samples_per_class = j.at("samples_per_class").get<std::size_t>();
    c.dim = j.at("dim").get<std::size_t>();
    c.cluster_dims = j.at("cluster_dims").get<std::size_t>();
    c.sigma_between = j.at("sigma_between").get<double>();
    c.sigma_within = j.at("sigma_within").get<double>();
    c.sigma_noise = j.at("sigma_noise").get<double>();
    c.cluster_noise_scale = j.at("cluster_noise_scale").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.train_clusters = j.at("train_clusters").get<std::size_t>();
    c.shared_class_split = j.at("shared_class_split").get<bool>();
    return c;
}

}  // namespace

void DataConfig::validate() const {
    if (n_clusters == 0 || classes_per_cluster == 0 || samples_per_class == 0) {
        throw ValidationError("data config: all counts must be >= 1");
    }
    if (dim == 0) throw ValidationError("data config: dim must be >= 1");
    if (cluster_dims == 0 || cluster_dims >= dim) {
        throw ValidationError("data config: cluster_dims must lie in [1, dim)");
    }
    if (sigma_between <= 0 || sigma_within <= 0 || sigma_noise <= 0) {
        throw ValidationError("data config: all sigmas must be > 0");
    }
    if (sigma_between <= sigma_within) {
        throw ValidationError("data config: requires sigma_between > sigma_within");
    }
    if (cluster_noise_scale <= 0) {
        throw ValidationError("data config: cluster_noise_scale must be > 0");
    }
    if (!shared_class_split && (train_clusters == 0 || train_clusters >= n_clusters)) {
        throw ValidationError("data config: train_clusters must lie in [1, n_clusters) "
                              "unless shared_class_split is set");
    }
}

std::string Dataset::class_label(std::size_t class_index) const {
    if (!class_names.empty()) return class_names.at(class_index);
    return "class_" + std::to_string(class_index);
}

Dataset generate_dataset(const DataConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.config = cfg;
    ds.dim = cfg.dim;
    ds.n_rows = cfg.n_rows();
    ds.features.resize(ds.n_rows * ds.dim);
    ds.class_of_sample.resize(ds.n_rows);
    ds.cluster_of_class.resize(cfg.n_classes());

    const std::size_t fine_dims = cfg.dim - cfg.cluster_dims;
    const double coarse_noise = cfg.sigma_noise * cfg.cluster_noise_scale;
    Rng rng(cfg.seed);

    std::vector<double> cluster_center(cfg.cluster_dims);
    std::vector<double> class_center(cfg.dim);
    std::size_t row = 0;
    for (std::size_t cl = 0; cl < cfg.n_clusters; ++cl) {
        for (std::size_t d = 0; d < cfg.cluster_dims; ++d) {
            cluster_center[d] = cfg.sigma_between * rng.normal();
        }
        for (std::size_t k = 0; k < cfg.classes_per_cluster; ++k) {
            const std::size_t class_index = cl * cfg.classes_per_cluster + k;
            ds.cluster_of_class[class_index] = static_cast<std::int32_t>(cl);
            for (std::size_t d = 0; d < cfg.cluster_dims; ++d) class_center[d] = cluster_center[d];
            for (std::size_t d = 0; d < fine_dims; ++d) {
                class_center[cfg.cluster_dims + d] = cfg.sigma_within * rng.normal();
            }
            for (std::size_t s = 0; s < cfg.samples_per_class; ++s, ++row) {
                ds.class_of_sample[row] = static_cast<std::int32_t>(class_index);
                float* out = ds.features.data() + row * cfg.dim;
                for (std::size_t d = 0; d < cfg.dim; ++d) {
                    const double sigma = d < cfg.cluster_dims ? coarse_noise : cfg.sigma_noise;
                    out[d] = static_cast<float>(class_center[d] + sigma * rng.normal());
                }
            }
        }
    }

    for (const float v : ds.features) {
        if (!std::isfinite(v)) throw DivergenceError("generated dataset contains non-finite value");
    }
    return ds;
}

Dataset dataset_from_manifest(const ClusterManifest& manifest, const DataConfig& cfg) {
    if (manifest.clusters.size() != cfg.n_clusters) {
        throw ValidationError("manifest has " + std::to_string(manifest.clusters.size()) +
                              " clusters but config expects " + std::to_string(cfg.n_clusters));
    }
    for (const auto& c : manifest.clusters) {
        if (c.classes.size() != cfg.classes_per_cluster) {
            throw ValidationError("manifest cluster '" + c.root + "' has " +
                                  std::to_string(c.classes.size()) +
                                  " classes but config expects " +
                                  std::to_string(cfg.classes_per_cluster));
        }
    }
    Dataset ds = generate_dataset(cfg);
    ds.class_names.reserve(cfg.n_classes());
    for (const auto& c : manifest.clusters) {
        for (const auto& id : c.classes) ds.class_names.push_back(id);
    }
    return ds;
}

void Dataset::save(const std::filesystem::path& bin_path,
                   const std::filesystem::path& sidecar_path) const {
    std::ofstream out(bin_path, std::ios::binary);
    if (!out) throw ValidationError("cannot write dataset '" + bin_path.string() + "'");
    write_u32(out, static_cast<std::uint32_t>(n_rows));
    write_u32(out, static_cast<std::uint32_t>(dim));
    write_u32(out, static_cast<std::uint32_t>(n_classes()));
    write_u32(out, static_cast<std::uint32_t>(config.n_clusters));
    static_assert(sizeof(float) == 4);
    out.write(reinterpret_cast<const char*>(features.data()),
              static_cast<std::streamsize>(features.size() * sizeof(float)));
    if (!out) throw ValidationError("failed writing dataset '" + bin_path.string() + "'");

    nlohmann::ordered_json j;
    j["config"] = config_to_json(config);
    j["class_of_sample"] = class_of_sample;
    j["cluster_of_class"] = cluster_of_class;
    j["class_names"] = class_names;
    std::ofstream side(sidecar_path);
    if (!side) throw ValidationError("cannot write sidecar '" + sidecar_path.string() + "'");
    side << j.dump(2) << '\n';
}

Dataset Dataset::load(const std::filesystem::path& bin_path,
                      const std::filesystem::path& sidecar_path) {
    std::ifstream side(sidecar_path);
    if (!side) throw ValidationError("cannot open sidecar '" + sidecar_path.string() + "'");
    nlohmann::json j;
    try {
        side >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("invalid sidecar JSON '" + sidecar_path.string() + "': " + e.what());
    }

    Dataset ds;
    try {
        ds.config = config_from_json(j.at("config"));
        ds.class_of_sample = j.at("class_of_sample").get<std::vector<std::int32_t>>();
        ds.cluster_of_class = j.at("cluster_of_class").get<std::vector<std::int32_t>>();
        ds.class_names = j.at("class_names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("sidecar '" + sidecar_path.string() + "' missing fields: " +
                              e.what());
    }

    std::ifstream in(bin_path, std::ios::binary);
    if (!in) throw ValidationError("cannot open dataset '" + bin_path.string() + "'");
    ds.n_rows = read_u32(in);
    ds.dim = read_u32(in);
    const std::uint32_t n_classes = read_u32(in);
    const std::uint32_t n_clusters = read_u32(in);
    if (n_classes != ds.cluster_of_class.size() || n_clusters != ds.config.n_clusters ||
        ds.n_rows != ds.class_of_sample.size() || ds.dim != ds.config.dim) {
        throw ValidationError("dataset header disagrees with sidecar '" + bin_path.string() + "'");
    }
    ds.features.resize(ds.n_rows * ds.dim);
    in.read(reinterpret_cast<char*>(ds.features.data()),
            static_cast<std::streamsize>(ds.features.size() * sizeof(float)));
    if (!in) throw ValidationError("dataset file truncated '" + bin_path.string() + "'");
    return ds;
}

}  // namespace metatask
