#pragma once

#include <functional>

#include "metatask/autodiff.hpp"
#include "metatask/episode.hpp"
#include "metatask/mlp.hpp"
#include "metatask/protonet.hpp"

namespace metatask {

struct MamlOptions {
    double inner_lr = 0.25;
    std::size_t inner_steps = 5;
    bool second_order = true;

    void validate() const;
};

/// MAML state: classifier initialization (output_dim = n_way) plus the
/// inner-loop schedule.
struct MamlState {
    ModelParams params;
    MamlOptions options;
};

/// Scalar loss of a parameter set, recorded on the tape.
using TapeLossFn = std::function<Tape::NodeId(Tape&, const std::vector<Tape::NodeId>&)>;

/// Generic inner loop: `steps` recorded gradient-descent steps on loss_fn
/// starting from `init`. With second_order the returned parameters keep the
/// full differentiable path back to `init`; without it each step's gradient
/// is detached (first-order approximation).
std::vector<Tape::NodeId> adapt_params(Tape& tape, const std::vector<Tape::NodeId>& init,
                                       const TapeLossFn& loss_fn, double inner_lr,
                                       std::size_t steps, bool second_order);

/// Inner adaptation on the episode's support cross-entropy.
TapeParams maml_adapt(Tape& tape, const MlpConfig& cfg, const MamlOptions& options,
                      const TapeParams& init, const Episode& episode);

struct MamlMetaGradient {
    std::vector<Mat> grads;  // d(query loss at adapted params) / d(initial params)
    double query_loss = 0.0;
    double query_accuracy = 0.0;
};

/// Query cross-entropy at the adapted parameters, differentiated with respect
/// to the initial parameters -- exactly through the inner loop when
/// second_order, else the first-order approximation.
MamlMetaGradient maml_meta_gradient(const MamlState& state, const Episode& episode);

/// Fresh inner adaptation on the episode's support, then query scoring.
EpisodeScore maml_evaluate(const MamlState& state, const Episode& episode);

}  // namespace metatask
