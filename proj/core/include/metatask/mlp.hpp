#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metatask/autodiff.hpp"

namespace metatask {

/// Fully-connected ReLU network: input_dim -> hidden... -> output_dim.
/// Weights are fan-in-scaled Gaussians (std = sqrt(2/fan_in)), biases zero.
struct MlpConfig {
    std::size_t input_dim = 16;
    std::vector<std::size_t> hidden = {8};
    std::size_t output_dim = 5;
    std::string activation = "relu";
    std::uint64_t seed = 3;

    void validate() const;
    std::vector<std::size_t> layer_sizes() const;  // input, hidden..., output
    std::size_t param_count() const;

    nlohmann::ordered_json to_json() const;
    static MlpConfig from_json(const nlohmann::json& j);
    /// FNV-1a over the canonical JSON; stored in checkpoint headers.
    std::uint64_t hash() const;

    bool operator==(const MlpConfig&) const = default;
};

/// Parameter values as alternating weight/bias matrices:
/// W0 [in x h0], b0 [1 x h0], W1, b1, ...
struct ModelParams {
    MlpConfig config;
    std::vector<Mat> tensors;

    static ModelParams init(const MlpConfig& cfg);

    std::size_t flat_size() const;
    std::vector<double> flatten() const;
    static ModelParams unflatten(const MlpConfig& cfg, std::span<const double> flat);
};

/// Parameters placed on a tape as differentiable leaves (or arbitrary nodes
/// mid-adaptation).
struct TapeParams {
    std::vector<Tape::NodeId> nodes;
};

TapeParams place_on_tape(Tape& tape, const ModelParams& params);

/// Reads node values back into a ModelParams.
ModelParams params_from_tape(const Tape& tape, const MlpConfig& cfg, const TapeParams& p);

/// Recorded MLP application; x is [batch x input_dim].
Tape::NodeId mlp_forward(Tape& tape, const MlpConfig& cfg, const TapeParams& params,
                         Tape::NodeId x);

/// Convenience value-mode forward (records on a scratch tape internally).
Mat mlp_forward_values(const ModelParams& params, const Mat& x);

/// params - lr * grads, value mode. Throws on tensor-count/shape mismatch.
ModelParams sgd_step(const ModelParams& params, const std::vector<Mat>& grads, double lr);

/// params - lr * grads as recorded tape operations, so outer gradients can
/// traverse the update when it sits inside an inner loop.
TapeParams sgd_step(Tape& tape, const TapeParams& params, const std::vector<Tape::NodeId>& grads,
                    double lr);

/// Numerically stable log-softmax over rows.
Tape::NodeId log_softmax(Tape& tape, Tape::NodeId logits);

/// Mean cross-entropy of logits [n x C] against labels (one per row).
Tape::NodeId cross_entropy(Tape& tape, Tape::NodeId logits, std::vector<std::int32_t> labels);

/// Fraction of rows whose argmax equals the label; exact logit ties go to the
/// lowest class index.
double accuracy(const Mat& logits, std::span<const std::int32_t> labels);

/// Checkpoint: binary header {u64 config hash, u64 flat length} + float64
/// parameter vector, plus a JSON sidecar holding the MlpConfig and any extra
/// metadata (algo, regime, ...).
void save_checkpoint(const ModelParams& params, const std::filesystem::path& bin_path,
                     const std::filesystem::path& sidecar_path,
                     const nlohmann::ordered_json& extra = {});
ModelParams load_checkpoint(const std::filesystem::path& bin_path,
                            const std::filesystem::path& sidecar_path,
                            nlohmann::json* extra_out = nullptr);

}  // namespace metatask
