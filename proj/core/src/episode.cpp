#include "metatask/episode.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "metatask/errors.hpp"

namespace metatask {

Regime Regime::parse(const std::string& text) {
    if (text == "random") return random();
    if (text == "hard") return hard();
    if (text == "mixed") return mixed(0.5);
    if (text.rfind("mixed:", 0) == 0) {
        try {
            const double p = std::stod(text.substr(6));
            Regime r = mixed(p);
            r.validate();
            return r;
        } catch (const std::logic_error&) {
            // fall through to the error below
        }
    }
    throw ValidationError("unknown regime '" + text +
                          "' (expected random, hard, mixed or mixed:<p>)");
}

std::string Regime::name() const {
    switch (kind) {
        case Kind::Random: return "random";
        case Kind::Hard: return "hard";
        case Kind::Mixed: return "mixed";
    }
    return "?";
}

void Regime::validate() const {
    if (kind == Kind::Mixed && (!(p_hard >= 0.0) || !(p_hard <= 1.0))) {
        throw ValidationError("mixed regime requires p_hard in [0, 1]");
    }
}

void EpisodeConfig::validate() const {
    if (n_way < 2) throw ValidationError("episode config: n_way must be >= 2");
    if (k_shot == 0 || q_query == 0) {
        throw ValidationError("episode config: k_shot and q_query must be >= 1");
    }
}

ClassPool::ClassPool(const Dataset& data, bool train, bool test) {
    const auto n_train = static_cast<std::int32_t>(data.config.train_clusters);
    std::map<std::int32_t, std::vector<std::int32_t>> by_cluster;
    for (std::size_t c = 0; c < data.n_classes(); ++c) {
        const std::int32_t cluster = data.cluster_of_class[c];
        const bool in_train = data.config.shared_class_split || cluster < n_train;
        const bool in_test = data.config.shared_class_split || cluster >= n_train;
        if ((train && in_train) || (test && in_test)) {
            by_cluster[cluster].push_back(static_cast<std::int32_t>(c));
        }
    }
    for (auto& [cluster, members] : by_cluster) {
        for (const std::int32_t c : members) classes_.push_back(c);
        clusters_.push_back(std::move(members));
    }
}

ClassPool ClassPool::train_split(const Dataset& data) { return ClassPool(data, true, false); }
ClassPool ClassPool::test_split(const Dataset& data) { return ClassPool(data, false, true); }
ClassPool ClassPool::all(const Dataset& data) { return ClassPool(data, true, true); }

namespace {

Episode assemble(const Dataset& data, const EpisodeConfig& cfg,
                 const std::vector<std::int32_t>& classes, bool is_hard, Rng& rng) {
    const std::size_t spc = data.samples_per_class();
    if (cfg.k_shot + cfg.q_query > spc) {
        throw ValidationError("episode config: k_shot + q_query exceeds samples_per_class (" +
                              std::to_string(cfg.k_shot + cfg.q_query) + " > " +
                              std::to_string(spc) + ")");
    }
    Episode ep;
    ep.classes = classes;
    ep.dim = data.dim;
    ep.is_hard = is_hard;
    ep.support_x.reserve(cfg.n_way * cfg.k_shot * data.dim);
    ep.query_x.reserve(cfg.n_way * cfg.q_query * data.dim);
    for (std::size_t label = 0; label < classes.size(); ++label) {
        const auto class_index = static_cast<std::size_t>(classes[label]);
        const auto picks = rng.sample_without_replacement(spc, cfg.k_shot + cfg.q_query);
        for (std::size_t i = 0; i < cfg.k_shot + cfg.q_query; ++i) {
            const std::size_t row = data.row_index(class_index, picks[i]);
            const float* src = data.row(row);
            const bool support = i < cfg.k_shot;
            auto& xs = support ? ep.support_x : ep.query_x;
            auto& ys = support ? ep.support_y : ep.query_y;
            auto& rows = support ? ep.support_rows : ep.query_rows;
            xs.insert(xs.end(), src, src + data.dim);
            ys.push_back(static_cast<std::int32_t>(label));
            rows.push_back(static_cast<std::int32_t>(row));
        }
    }
    return ep;
}

}  // namespace

Episode sample_random_task(const Dataset& data, const ClassPool& pool, const EpisodeConfig& cfg,
                           Rng& rng) {
    cfg.validate();
    const auto& classes = pool.classes();
    if (classes.size() < cfg.n_way) {
        throw ValidationError("pool has " + std::to_string(classes.size()) +
                              " classes, need n_way=" + std::to_string(cfg.n_way));
    }
    std::vector<std::int32_t> chosen;
    chosen.reserve(cfg.n_way);
    for (const std::size_t i : rng.sample_without_replacement(classes.size(), cfg.n_way)) {
        chosen.push_back(classes[i]);
    }
    return assemble(data, cfg, chosen, /*is_hard=*/false, rng);
}

Episode sample_hard_task(const Dataset& data, const ClassPool& pool, const EpisodeConfig& cfg,
                         Rng& rng) {
    cfg.validate();
    std::vector<const std::vector<std::int32_t>*> eligible;
    for (const auto& members : pool.clusters()) {
        if (members.size() >= cfg.n_way) eligible.push_back(&members);
    }
    if (eligible.empty()) {
        throw ValidationError("no cluster in the pool has >= n_way=" + std::to_string(cfg.n_way) +
                              " classes");
    }
    const auto& members = *eligible[rng.uniform_index(eligible.size())];
    std::vector<std::int32_t> chosen;
    chosen.reserve(cfg.n_way);
    for (const std::size_t i : rng.sample_without_replacement(members.size(), cfg.n_way)) {
        chosen.push_back(members[i]);
    }
    return assemble(data, cfg, chosen, /*is_hard=*/true, rng);
}

Episode sample_task(const Dataset& data, const ClassPool& pool, const EpisodeConfig& cfg,
                    const Regime& regime, Rng& rng) {
    regime.validate();
    switch (regime.kind) {
        case Regime::Kind::Random: return sample_random_task(data, pool, cfg, rng);
        case Regime::Kind::Hard: return sample_hard_task(data, pool, cfg, rng);
        case Regime::Kind::Mixed:
            return rng.bernoulli(regime.p_hard) ? sample_hard_task(data, pool, cfg, rng)
                                                : sample_random_task(data, pool, cfg, rng);
    }
    throw ValidationError("invalid regime");
}

std::vector<Episode> sample_batch(const Dataset& data, const ClassPool& pool,
                                  const EpisodeConfig& cfg, const Regime& regime,
                                  std::size_t batch_size, const Rng& base,
                                  std::uint64_t first_episode_index) {
    if (batch_size == 0) throw ValidationError("sample_batch: batch_size must be >= 1");
    std::vector<Episode> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        Rng episode_rng = base.derive(first_episode_index + i);
        batch.push_back(sample_task(data, pool, cfg, regime, episode_rng));
    }
    return batch;
}

void write_episode_json(const Episode& episode, const Dataset& data,
                        const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["is_hard"] = episode.is_hard;
    j["classes"] = nlohmann::ordered_json::array();
    for (const std::int32_t c : episode.classes) {
        nlohmann::ordered_json jc;
        jc["class_index"] = c;
        jc["label"] = data.class_label(static_cast<std::size_t>(c));
        jc["cluster"] = data.cluster_of_class.at(static_cast<std::size_t>(c));
        j["classes"].push_back(std::move(jc));
    }
    j["support_rows"] = episode.support_rows;
    j["query_rows"] = episode.query_rows;
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write episode dump '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

}  // namespace metatask
