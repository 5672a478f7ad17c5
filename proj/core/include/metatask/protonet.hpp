#pragma once

#include "metatask/autodiff.hpp"
#include "metatask/episode.hpp"
#include "metatask/mlp.hpp"

namespace metatask {

/// Prototypical-network state: an embedding MLP (output_dim = embedding size).
struct ProtoNetState {
    ModelParams params;
};

struct EpisodeScore {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Per-class prototypes: mean embedding of each class's support examples.
/// support_embeddings is [n_way*k_shot x e] ordered class-major (k_shot
/// consecutive rows per class); result is [n_way x e].
Tape::NodeId protonet_prototypes(Tape& tape, Tape::NodeId support_embeddings, std::size_t n_way,
                                 std::size_t k_shot);

/// Squared Euclidean distance matrix between rows of a [n x e] and rows of
/// b [m x e]; result [n x m].
Tape::NodeId squared_distances(Tape& tape, Tape::NodeId a, Tape::NodeId b);

struct ProtoNetEpisodeLoss {
    Tape::NodeId loss;  // scalar node
    double accuracy;    // fraction of query points whose nearest prototype is correct
};

/// Query logits are negative squared distances to the prototypes; loss is the
/// mean cross-entropy over query points.
ProtoNetEpisodeLoss protonet_episode_loss(Tape& tape, const MlpConfig& cfg,
                                          const TapeParams& params, const Episode& episode);

/// Value-mode episode evaluation for a trained state.
EpisodeScore protonet_evaluate(const ProtoNetState& state, const Episode& episode);

/// Copies an episode's feature block into a matrix (rows = examples).
Mat episode_matrix(const std::vector<float>& x, std::size_t dim);

}  // namespace metatask
