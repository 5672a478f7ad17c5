#include "metatask/maml.hpp"

#include "metatask/errors.hpp"

namespace metatask {

void MamlOptions::validate() const {
    if (!(inner_lr > 0.0)) throw ValidationError("maml options: inner_lr must be > 0");
    if (inner_steps == 0) throw ValidationError("maml options: inner_steps must be >= 1");
}

std::vector<Tape::NodeId> adapt_params(Tape& tape, const std::vector<Tape::NodeId>& init,
                                       const TapeLossFn& loss_fn, double inner_lr,
                                       std::size_t steps, bool second_order) {
    std::vector<Tape::NodeId> current = init;
    for (std::size_t s = 0; s < steps; ++s) {
        const Tape::NodeId loss = loss_fn(tape, current);
        std::vector<Tape::NodeId> grads = tape.gradient(loss, current);
        if (!second_order) {
            for (auto& g : grads) g = tape.detach(g);
        }
        TapeParams stepped = sgd_step(tape, TapeParams{current}, grads, inner_lr);
        current = std::move(stepped.nodes);
    }
    return current;
}

TapeParams maml_adapt(Tape& tape, const MlpConfig& cfg, const MamlOptions& options,
                      const TapeParams& init, const Episode& episode) {
    options.validate();
    const Tape::NodeId support_x = tape.constant(episode_matrix(episode.support_x, episode.dim));
    const auto support_y = episode.support_y;
    const TapeLossFn support_loss = [&](Tape& t, const std::vector<Tape::NodeId>& p) {
        return cross_entropy(t, mlp_forward(t, cfg, TapeParams{p}, support_x), support_y);
    };
    return TapeParams{adapt_params(tape, init.nodes, support_loss, options.inner_lr,
                                   options.inner_steps, options.second_order)};
}

MamlMetaGradient maml_meta_gradient(const MamlState& state, const Episode& episode) {
    Tape tape;
    const TapeParams init = place_on_tape(tape, state.params);
    const TapeParams adapted =
        maml_adapt(tape, state.params.config, state.options, init, episode);

    const Tape::NodeId query_x = tape.constant(episode_matrix(episode.query_x, episode.dim));
    const Tape::NodeId logits = mlp_forward(tape, state.params.config, adapted, query_x);
    const Tape::NodeId loss = cross_entropy(tape, logits, episode.query_y);

    MamlMetaGradient out;
    out.query_loss = tape.value(loss)(0, 0);
    out.query_accuracy = accuracy(tape.value(logits), episode.query_y);
    const auto grad_nodes = tape.gradient(loss, init.nodes);
    out.grads.reserve(grad_nodes.size());
    for (const Tape::NodeId g : grad_nodes) out.grads.push_back(tape.value(g));
    return out;
}

EpisodeScore maml_evaluate(const MamlState& state, const Episode& episode) {
    Tape tape;
    const TapeParams init = place_on_tape(tape, state.params);
    // Adaptation values do not depend on the meta-gradient mode; first-order
    // keeps the tape small.
    MamlOptions opts = state.options;
    opts.second_order = false;
    const TapeParams adapted = maml_adapt(tape, state.params.config, opts, init, episode);

    const Tape::NodeId query_x = tape.constant(episode_matrix(episode.query_x, episode.dim));
    const Tape::NodeId logits = mlp_forward(tape, state.params.config, adapted, query_x);
    const Tape::NodeId loss = cross_entropy(tape, logits, episode.query_y);
    return {tape.value(loss)(0, 0), accuracy(tape.value(logits), episode.query_y)};
}

}  // namespace metatask
