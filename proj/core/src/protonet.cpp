#include "metatask/protonet.hpp"

#include "metatask/errors.hpp"

namespace metatask {

Mat episode_matrix(const std::vector<float>& x, std::size_t dim) {
    if (dim == 0 || x.size() % dim != 0) {
        throw ValidationError("episode feature block size is not a multiple of dim");
    }
    const auto rows = static_cast<Eigen::Index>(x.size() / dim);
    Mat m(rows, static_cast<Eigen::Index>(dim));
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(dim); ++c) {
            m(r, c) = static_cast<double>(x[static_cast<std::size_t>(r) * dim +
                                            static_cast<std::size_t>(c)]);
        }
    }
    return m;
}

Tape::NodeId protonet_prototypes(Tape& tape, Tape::NodeId support_embeddings, std::size_t n_way,
                                 std::size_t k_shot) {
    if (n_way == 0 || k_shot == 0) {
        throw ValidationError("protonet_prototypes: n_way and k_shot must be >= 1");
    }
    const Eigen::Index rows = tape.value(support_embeddings).rows();
    if (rows != static_cast<Eigen::Index>(n_way * k_shot)) {
        throw ValidationError("protonet_prototypes: expected " +
                              std::to_string(n_way * k_shot) + " support embeddings, got " +
                              std::to_string(rows));
    }
    // Constant averaging matrix: prototypes = A * embeddings.
    Mat averager = Mat::Zero(static_cast<Eigen::Index>(n_way), rows);
    for (std::size_t c = 0; c < n_way; ++c) {
        for (std::size_t k = 0; k < k_shot; ++k) {
            averager(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c * k_shot + k)) =
                1.0 / static_cast<double>(k_shot);
        }
    }
    return tape.matmul(tape.constant(std::move(averager)), support_embeddings);
}

Tape::NodeId squared_distances(Tape& tape, Tape::NodeId a, Tape::NodeId b) {
    const Eigen::Index n = tape.value(a).rows();
    const Eigen::Index m = tape.value(b).rows();
    if (tape.value(a).cols() != tape.value(b).cols()) {
        throw ValidationError("squared_distances: embedding widths disagree");
    }
    const Tape::NodeId a2 = tape.row_sums(tape.mul(a, a));  // [n x 1]
    const Tape::NodeId b2 = tape.row_sums(tape.mul(b, b));  // [m x 1]
    const Tape::NodeId cross = tape.matmul(a, tape.transpose(b));
    return tape.add(tape.sub(tape.repeat_cols(a2, m), tape.scale(cross, 2.0)),
                    tape.repeat_rows(tape.transpose(b2), n));
}

ProtoNetEpisodeLoss protonet_episode_loss(Tape& tape, const MlpConfig& cfg,
                                          const TapeParams& params, const Episode& episode) {
    if (episode.n_way() == 0 || episode.n_support() % episode.n_way() != 0) {
        throw ValidationError("protonet_episode_loss: malformed episode support set");
    }
    const std::size_t k_shot = episode.n_support() / episode.n_way();

    const Tape::NodeId support_x = tape.constant(episode_matrix(episode.support_x, episode.dim));
    const Tape::NodeId query_x = tape.constant(episode_matrix(episode.query_x, episode.dim));

    const Tape::NodeId support_e = mlp_forward(tape, cfg, params, support_x);
    const Tape::NodeId query_e = mlp_forward(tape, cfg, params, query_x);
    const Tape::NodeId prototypes = protonet_prototypes(tape, support_e, episode.n_way(), k_shot);

    const Tape::NodeId logits = tape.neg(squared_distances(tape, query_e, prototypes));
    ProtoNetEpisodeLoss out;
    out.accuracy = accuracy(tape.value(logits), episode.query_y);
    out.loss = cross_entropy(tape, logits, episode.query_y);
    return out;
}

EpisodeScore protonet_evaluate(const ProtoNetState& state, const Episode& episode) {
    Tape tape;
    const TapeParams params = place_on_tape(tape, state.params);
    const ProtoNetEpisodeLoss r = protonet_episode_loss(tape, state.params.config, params, episode);
    return {tape.value(r.loss)(0, 0), r.accuracy};
}

}  // namespace metatask
