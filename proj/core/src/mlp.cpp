#include "metatask/mlp.hpp"

#include <cmath>
#include <fstream>

#include "metatask/errors.hpp"
#include "metatask/rng.hpp"

namespace metatask {

void MlpConfig::validate() const {
    if (input_dim == 0 || output_dim == 0) {
        throw ValidationError("mlp config: input_dim and output_dim must be >= 1");
    }
    for (const std::size_t w : hidden) {
        if (w == 0) throw ValidationError("mlp config: hidden widths must be >= 1");
    }
    if (activation != "relu") {
        throw ValidationError("mlp config: unsupported activation '" + activation + "'");
    }
}

std::vector<std::size_t> MlpConfig::layer_sizes() const {
    std::vector<std::size_t> sizes;
    sizes.push_back(input_dim);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(output_dim);
    return sizes;
}

std::size_t MlpConfig::param_count() const {
    const auto sizes = layer_sizes();
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) n += sizes[i] * sizes[i + 1] + sizes[i + 1];
    return n;
}

nlohmann::ordered_json MlpConfig::to_json() const {
    nlohmann::ordered_json j;
    j["input_dim"] = input_dim;
    j["hidden"] = hidden;
    j["output_dim"] = output_dim;
    j["activation"] = activation;
    j["seed"] = seed;
    return j;
}

MlpConfig MlpConfig::from_json(const nlohmann::json& j) {
    MlpConfig c;
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    c.output_dim = j.at("output_dim").get<std::size_t>();
    c.activation = j.at("activation").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

std::uint64_t MlpConfig::hash() const {
    const std::string s = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ModelParams ModelParams::init(const MlpConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.config = cfg;
    Rng rng(cfg.seed);
    const auto sizes = cfg.layer_sizes();
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        const auto fan_in = static_cast<Eigen::Index>(sizes[i]);
        const auto fan_out = static_cast<Eigen::Index>(sizes[i + 1]);
        const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
        Mat w(fan_in, fan_out);
        for (Eigen::Index r = 0; r < fan_in; ++r) {
            for (Eigen::Index c = 0; c < fan_out; ++c) w(r, c) = std_dev * rng.normal();
        }
        p.tensors.push_back(std::move(w));
        p.tensors.push_back(Mat::Zero(1, fan_out));
    }
    return p;
}

std::size_t ModelParams::flat_size() const {
    std::size_t n = 0;
    for (const Mat& t : tensors) n += static_cast<std::size_t>(t.size());
    return n;
}

std::vector<double> ModelParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(flat_size());
    for (const Mat& t : tensors) {
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
            for (Eigen::Index c = 0; c < t.cols(); ++c) flat.push_back(t(r, c));
        }
    }
    return flat;
}

ModelParams ModelParams::unflatten(const MlpConfig& cfg, std::span<const double> flat) {
    if (flat.size() != cfg.param_count()) {
        throw ValidationError("unflatten: expected " + std::to_string(cfg.param_count()) +
                              " values, got " + std::to_string(flat.size()));
    }
    ModelParams p;
    p.config = cfg;
    const auto sizes = cfg.layer_sizes();
    std::size_t pos = 0;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        const auto fan_in = static_cast<Eigen::Index>(sizes[i]);
        const auto fan_out = static_cast<Eigen::Index>(sizes[i + 1]);
        Mat w(fan_in, fan_out);
        for (Eigen::Index r = 0; r < fan_in; ++r) {
            for (Eigen::Index c = 0; c < fan_out; ++c) w(r, c) = flat[pos++];
        }
        Mat b(1, fan_out);
        for (Eigen::Index c = 0; c < fan_out; ++c) b(0, c) = flat[pos++];
        p.tensors.push_back(std::move(w));
        p.tensors.push_back(std::move(b));
    }
    return p;
}

TapeParams place_on_tape(Tape& tape, const ModelParams& params) {
    TapeParams p;
    p.nodes.reserve(params.tensors.size());
    for (const Mat& t : params.tensors) p.nodes.push_back(tape.leaf(t));
    return p;
}

ModelParams params_from_tape(const Tape& tape, const MlpConfig& cfg, const TapeParams& p) {
    ModelParams out;
    out.config = cfg;
    out.tensors.reserve(p.nodes.size());
    for (const Tape::NodeId id : p.nodes) out.tensors.push_back(tape.value(id));
    return out;
}

Tape::NodeId mlp_forward(Tape& tape, const MlpConfig& cfg, const TapeParams& params,
                         Tape::NodeId x) {
    const auto sizes = cfg.layer_sizes();
    const std::size_t n_layers = sizes.size() - 1;
    if (params.nodes.size() != 2 * n_layers) {
        throw ValidationError("mlp_forward: parameter count disagrees with config");
    }
    if (tape.value(x).cols() != static_cast<Eigen::Index>(cfg.input_dim)) {
        throw ValidationError("mlp_forward: input has " + std::to_string(tape.value(x).cols()) +
                              " columns, config expects " + std::to_string(cfg.input_dim));
    }
    const Eigen::Index batch = tape.value(x).rows();
    Tape::NodeId h = x;
    for (std::size_t i = 0; i < n_layers; ++i) {
        h = tape.matmul(h, params.nodes[2 * i]);
        h = tape.add(h, tape.repeat_rows(params.nodes[2 * i + 1], batch));
        if (i + 1 < n_layers) h = tape.relu(h);
    }
    return h;
}

Mat mlp_forward_values(const ModelParams& params, const Mat& x) {
    Tape tape;
    const TapeParams p = place_on_tape(tape, params);
    return tape.value(mlp_forward(tape, params.config, p, tape.constant(x)));
}

ModelParams sgd_step(const ModelParams& params, const std::vector<Mat>& grads, double lr) {
    if (lr < 0) throw ValidationError("sgd_step: learning rate must be >= 0");
    if (grads.size() != params.tensors.size()) {
        throw ValidationError("sgd_step: gradient tensor count mismatch");
    }
    ModelParams out = params;
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].rows() != params.tensors[i].rows() ||
            grads[i].cols() != params.tensors[i].cols()) {
            throw ValidationError("sgd_step: gradient shape mismatch at tensor " +
                                  std::to_string(i));
        }
        out.tensors[i] -= lr * grads[i];
    }
    return out;
}

TapeParams sgd_step(Tape& tape, const TapeParams& params, const std::vector<Tape::NodeId>& grads,
                    double lr) {
    if (grads.size() != params.nodes.size()) {
        throw ValidationError("sgd_step: gradient tensor count mismatch");
    }
    TapeParams out;
    out.nodes.reserve(params.nodes.size());
    for (std::size_t i = 0; i < grads.size(); ++i) {
        out.nodes.push_back(tape.sub(params.nodes[i], tape.scale(grads[i], lr)));
    }
    return out;
}

Tape::NodeId log_softmax(Tape& tape, Tape::NodeId logits) {
    const Mat& v = tape.value(logits);
    // The row max enters as a constant shift; log(sum exp(x - m)) + m equals
    // the true log-sum-exp identically for any constant m, so every
    // derivative order stays exact.
    const Mat row_max = v.rowwise().maxCoeff();
    const Tape::NodeId m = tape.constant(row_max);
    const Tape::NodeId shifted = tape.sub(logits, tape.repeat_cols(m, v.cols()));
    const Tape::NodeId lse =
        tape.add(tape.log(tape.row_sums(tape.exp(shifted))), m);
    return tape.sub(logits, tape.repeat_cols(lse, v.cols()));
}

Tape::NodeId cross_entropy(Tape& tape, Tape::NodeId logits, std::vector<std::int32_t> labels) {
    const Eigen::Index n = tape.value(logits).rows();
    if (static_cast<Eigen::Index>(labels.size()) != n) {
        throw ValidationError("cross_entropy: one label per logit row required");
    }
    const Tape::NodeId picked = tape.gather_labels(log_softmax(tape, logits), std::move(labels));
    return tape.scale(tape.sum_all(picked), -1.0 / static_cast<double>(n));
}

double accuracy(const Mat& logits, std::span<const std::int32_t> labels) {
    if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
        throw ValidationError("accuracy: one label per logit row required");
    }
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c) {
            if (logits(i, c) > logits(i, best)) best = c;  // ties keep the lowest index
        }
        if (best == labels[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& bin_path,
                     const std::filesystem::path& sidecar_path,
                     const nlohmann::ordered_json& extra) {
    std::ofstream out(bin_path, std::ios::binary);
    if (!out) throw ValidationError("cannot write checkpoint '" + bin_path.string() + "'");
    const std::uint64_t header[2] = {params.config.hash(), params.flat_size()};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    const std::vector<double> flat = params.flatten();
    out.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!out) throw ValidationError("failed writing checkpoint '" + bin_path.string() + "'");

    nlohmann::ordered_json j;
    j["mlp"] = params.config.to_json();
    if (!extra.is_null()) {
        for (const auto& [k, v] : extra.items()) j[k] = v;
    }
    std::ofstream side(sidecar_path);
    if (!side) throw ValidationError("cannot write sidecar '" + sidecar_path.string() + "'");
    side << j.dump(2) << '\n';
}

ModelParams load_checkpoint(const std::filesystem::path& bin_path,
                            const std::filesystem::path& sidecar_path,
                            nlohmann::json* extra_out) {
    std::ifstream side(sidecar_path);
    if (!side) throw ValidationError("cannot open sidecar '" + sidecar_path.string() + "'");
    nlohmann::json j;
    try {
        side >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("invalid sidecar JSON '" + sidecar_path.string() + "': " + e.what());
    }
    MlpConfig cfg;
    try {
        cfg = MlpConfig::from_json(j.at("mlp"));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("sidecar '" + sidecar_path.string() + "' missing fields: " +
                              e.what());
    }
    if (extra_out) *extra_out = j;

    std::ifstream in(bin_path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint '" + bin_path.string() + "'");
    std::uint64_t header[2];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw ValidationError("checkpoint truncated '" + bin_path.string() + "'");
    if (header[0] != cfg.hash()) {
        throw ValidationError("checkpoint config hash disagrees with sidecar '" +
                              bin_path.string() + "'");
    }
    if (header[1] != cfg.param_count()) {
        throw ValidationError("checkpoint parameter count disagrees with config '" +
                              bin_path.string() + "'");
    }
    std::vector<double> flat(header[1]);
    in.read(reinterpret_cast<char*>(flat.data()),
            static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!in) throw ValidationError("checkpoint truncated '" + bin_path.string() + "'");
    return ModelParams::unflatten(cfg, flat);
}

}  // namespace metatask
