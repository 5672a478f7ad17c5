#include "metatask/autodiff.hpp"

#include <string>

#include "metatask/errors.hpp"

namespace metatask {

namespace {
const char* op_name(int op);
}

const Tape::Node& Tape::node(NodeId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
        throw ValidationError("invalid tape node id " + std::to_string(id));
    }
    return nodes_[static_cast<std::size_t>(id)];
}

const Mat& Tape::value(NodeId id) const { return node(id).value; }

bool Tape::requires_grad(NodeId id) const { return node(id).requires_grad; }

Tape::NodeId Tape::push(Op op, NodeId a, NodeId b, Mat value) {
    if (!value.allFinite()) {
        throw DivergenceError(std::string("non-finite value produced by ") +
                              op_name(static_cast<int>(op)));
    }
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.value = std::move(value);
    n.requires_grad = op == Op::Leaf || (a != kNoNode && nodes_[a].requires_grad) ||
                      (b != kNoNode && nodes_[b].requires_grad);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::check_same_shape(NodeId a, NodeId b, const char* name) const {
    const Mat& va = value(a);
    const Mat& vb = value(b);
    if (va.rows() != vb.rows() || va.cols() != vb.cols()) {
        throw ValidationError(std::string(name) + ": shape mismatch (" +
                              std::to_string(va.rows()) + "x" + std::to_string(va.cols()) +
                              " vs " + std::to_string(vb.rows()) + "x" +
                              std::to_string(vb.cols()) + ")");
    }
}

Tape::NodeId Tape::constant(Mat value) { return push(Op::Constant, kNoNode, kNoNode, std::move(value)); }

Tape::NodeId Tape::leaf(Mat value) { return push(Op::Leaf, kNoNode, kNoNode, std::move(value)); }

Tape::NodeId Tape::add(NodeId a, NodeId b) {
    check_same_shape(a, b, "add");
    return push(Op::Add, a, b, value(a) + value(b));
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
    check_same_shape(a, b, "sub");
    return push(Op::Sub, a, b, value(a) - value(b));
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
    check_same_shape(a, b, "mul");
    return push(Op::Mul, a, b, value(a).cwiseProduct(value(b)));
}

Tape::NodeId Tape::div(NodeId a, NodeId b) {
    check_same_shape(a, b, "div");
    return push(Op::Div, a, b, value(a).cwiseQuotient(value(b)));
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
    if (value(a).cols() != value(b).rows()) {
        throw ValidationError("matmul: inner dimensions disagree (" +
                              std::to_string(value(a).cols()) + " vs " +
                              std::to_string(value(b).rows()) + ")");
    }
    return push(Op::MatMul, a, b, value(a) * value(b));
}

Tape::NodeId Tape::transpose(NodeId a) {
    return push(Op::Transpose, a, kNoNode, value(a).transpose());
}

Tape::NodeId Tape::relu(NodeId a) {
    return push(Op::Relu, a, kNoNode, value(a).cwiseMax(0.0));
}

Tape::NodeId Tape::exp(NodeId a) {
    return push(Op::Exp, a, kNoNode, value(a).array().exp().matrix());
}

Tape::NodeId Tape::log(NodeId a) {
    return push(Op::Log, a, kNoNode, value(a).array().log().matrix());
}

Tape::NodeId Tape::scale(NodeId a, double factor) {
    NodeId id = push(Op::Scale, a, kNoNode, value(a) * factor);
    nodes_.back().factor = factor;
    return id;
}

Tape::NodeId Tape::sum_all(NodeId a) {
    Mat v(1, 1);
    v(0, 0) = value(a).sum();
    return push(Op::SumAll, a, kNoNode, std::move(v));
}

Tape::NodeId Tape::row_sums(NodeId a) {
    return push(Op::RowSums, a, kNoNode, value(a).rowwise().sum());
}

Tape::NodeId Tape::col_sums(NodeId a) {
    Mat v = value(a).colwise().sum();
    return push(Op::ColSums, a, kNoNode, std::move(v));
}

Tape::NodeId Tape::repeat_rows(NodeId a, Eigen::Index n) {
    if (value(a).rows() != 1) throw ValidationError("repeat_rows expects a [1 x m] input");
    return push(Op::RepeatRows, a, kNoNode, value(a).replicate(n, 1));
}

Tape::NodeId Tape::repeat_cols(NodeId a, Eigen::Index m) {
    if (value(a).cols() != 1) throw ValidationError("repeat_cols expects an [n x 1] input");
    return push(Op::RepeatCols, a, kNoNode, value(a).replicate(1, m));
}

Tape::NodeId Tape::repeat_scalar(NodeId a, Eigen::Index n, Eigen::Index m) {
    if (value(a).size() != 1) throw ValidationError("repeat_scalar expects a [1 x 1] input");
    return push(Op::RepeatScalar, a, kNoNode, Mat::Constant(n, m, value(a)(0, 0)));
}

Tape::NodeId Tape::gather_labels(NodeId a, std::vector<std::int32_t> labels) {
    const Mat& v = value(a);
    if (static_cast<Eigen::Index>(labels.size()) != v.rows()) {
        throw ValidationError("gather_labels: one label per row required");
    }
    Mat out(v.rows(), 1);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const auto c = labels[static_cast<std::size_t>(i)];
        if (c < 0 || c >= v.cols()) throw ValidationError("gather_labels: label out of range");
        out(i, 0) = v(i, c);
    }
    NodeId id = push(Op::Gather, a, kNoNode, std::move(out));
    nodes_.back().labels = std::make_shared<const std::vector<std::int32_t>>(std::move(labels));
    return id;
}

Tape::NodeId Tape::scatter_labels(NodeId a, std::vector<std::int32_t> labels, Eigen::Index cols) {
    const Mat& v = value(a);
    if (v.cols() != 1 || static_cast<Eigen::Index>(labels.size()) != v.rows()) {
        throw ValidationError("scatter_labels expects [n x 1] input with one label per row");
    }
    Mat out = Mat::Zero(v.rows(), cols);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const auto c = labels[static_cast<std::size_t>(i)];
        if (c < 0 || c >= cols) throw ValidationError("scatter_labels: label out of range");
        out(i, c) = v(i, 0);
    }
    NodeId id = push(Op::Scatter, a, kNoNode, std::move(out));
    nodes_.back().labels = std::make_shared<const std::vector<std::int32_t>>(std::move(labels));
    return id;
}

Tape::NodeId Tape::detach(NodeId a) { return constant(value(a)); }

void Tape::accumulate(std::vector<NodeId>& adjoint, NodeId target, NodeId contribution) {
    if (!nodes_[target].requires_grad) return;
    auto& slot = adjoint[static_cast<std::size_t>(target)];
    slot = slot == kNoNode ? contribution : add(slot, contribution);
}

std::vector<Tape::NodeId> Tape::gradient(NodeId loss, std::span<const NodeId> wrt) {
    const Mat& loss_value = value(loss);
    if (loss_value.size() != 1) {
        throw ValidationError("gradient: loss must be a scalar");
    }

    // Ancestors of the loss that gradients flow into.
    const std::size_t frontier = static_cast<std::size_t>(loss) + 1;
    std::vector<bool> needed(frontier, false);
    needed[static_cast<std::size_t>(loss)] = nodes_[loss].requires_grad;
    for (std::size_t id = frontier; id-- > 0;) {
        if (!needed[id]) continue;
        const Node& n = nodes_[id];
        if (n.a != kNoNode && nodes_[n.a].requires_grad) needed[static_cast<std::size_t>(n.a)] = true;
        if (n.b != kNoNode && nodes_[n.b].requires_grad) needed[static_cast<std::size_t>(n.b)] = true;
    }

    bool connected = false;
    for (const NodeId w : wrt) {
        node(w);  // bounds check
        if (static_cast<std::size_t>(w) < frontier && needed[static_cast<std::size_t>(w)]) {
            connected = true;
            break;
        }
    }
    if (!connected) {
        throw ValidationError("gradient: loss is not connected to any requested node");
    }

    std::vector<NodeId> adjoint(frontier, kNoNode);
    adjoint[static_cast<std::size_t>(loss)] = constant(Mat::Ones(1, 1));

    for (std::size_t id = frontier; id-- > 0;) {
        if (!needed[id] || adjoint[id] == kNoNode) continue;
        const NodeId g = adjoint[id];
        // Snapshot fields; appending contribution nodes may reallocate nodes_.
        const Op op = nodes_[id].op;
        const NodeId a = nodes_[id].a;
        const NodeId b = nodes_[id].b;
        const double factor = nodes_[id].factor;
        const auto labels = nodes_[id].labels;
        switch (op) {
            case Op::Constant:
            case Op::Leaf:
                break;
            case Op::Add:
                accumulate(adjoint, a, g);
                accumulate(adjoint, b, g);
                break;
            case Op::Sub:
                accumulate(adjoint, a, g);
                accumulate(adjoint, b, neg(g));
                break;
            case Op::Mul:
                accumulate(adjoint, a, mul(g, b));
                accumulate(adjoint, b, mul(g, a));
                break;
            case Op::Div:
                accumulate(adjoint, a, div(g, b));
                accumulate(adjoint, b, neg(div(mul(g, a), mul(b, b))));
                break;
            case Op::MatMul:
                accumulate(adjoint, a, matmul(g, transpose(b)));
                accumulate(adjoint, b, matmul(transpose(a), g));
                break;
            case Op::Transpose:
                accumulate(adjoint, a, transpose(g));
                break;
            case Op::Relu: {
                const Mat mask = (value(a).array() > 0.0).cast<double>();
                accumulate(adjoint, a, mul(g, constant(mask)));
                break;
            }
            case Op::Exp:
                accumulate(adjoint, a, mul(g, static_cast<NodeId>(id)));
                break;
            case Op::Log:
                accumulate(adjoint, a, div(g, a));
                break;
            case Op::Scale:
                accumulate(adjoint, a, scale(g, factor));
                break;
            case Op::SumAll:
                accumulate(adjoint, a, repeat_scalar(g, value(a).rows(), value(a).cols()));
                break;
            case Op::RowSums:
                accumulate(adjoint, a, repeat_cols(g, value(a).cols()));
                break;
            case Op::ColSums:
                accumulate(adjoint, a, repeat_rows(g, value(a).rows()));
                break;
            case Op::RepeatRows:
                accumulate(adjoint, a, col_sums(g));
                break;
            case Op::RepeatCols:
                accumulate(adjoint, a, row_sums(g));
                break;
            case Op::RepeatScalar:
                accumulate(adjoint, a, sum_all(g));
                break;
            case Op::Gather:
                accumulate(adjoint, a, scatter_labels(g, *labels, value(a).cols()));
                break;
            case Op::Scatter:
                accumulate(adjoint, a, gather_labels(g, *labels));
                break;
        }
    }

    std::vector<NodeId> grads;
    grads.reserve(wrt.size());
    for (const NodeId w : wrt) {
        const std::size_t idx = static_cast<std::size_t>(w);
        if (idx < frontier && adjoint[idx] != kNoNode) {
            grads.push_back(adjoint[idx]);
        } else {
            grads.push_back(constant(Mat::Zero(value(w).rows(), value(w).cols())));
        }
    }
    return grads;
}

namespace {
const char* op_name(int op) {
    static const char* names[] = {"constant", "leaf", "add", "sub", "mul", "div",
                                  "matmul", "transpose", "relu", "exp", "log",
                                  "scale", "sum_all", "row_sums", "col_sums",
                                  "repeat_rows", "repeat_cols", "repeat_scalar",
                                  "gather_labels", "scatter_labels"};
    return names[op];
}
}  // namespace

}  // namespace metatask
