#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace metatask {

using Mat = Eigen::MatrixXd;

/// Reverse-mode differentiation tape over dense 64-bit matrices.
///
/// Every operation appends a node and computes its value eagerly. The
/// backward of each primitive is itself expressed in tape primitives, so the
/// nodes produced by gradient() can be differentiated again; MAML's
/// meta-gradient is one gradient() call over a graph that already contains
/// the inner loop's gradient nodes.
///
/// Scalars are 1x1 matrices. Any operation whose result contains NaN or Inf
/// throws DivergenceError. One tape per thread; tapes are not shared.
class Tape {
public:
    using NodeId = std::int32_t;
    static constexpr NodeId kNoNode = -1;

    /// Non-differentiable input (data, masks). Gradients do not flow into it.
    NodeId constant(Mat value);
    /// Differentiable input (parameters).
    NodeId leaf(Mat value);

    NodeId add(NodeId a, NodeId b);     // same shape
    NodeId sub(NodeId a, NodeId b);     // same shape
    NodeId mul(NodeId a, NodeId b);     // elementwise, same shape
    NodeId div(NodeId a, NodeId b);     // elementwise, same shape
    NodeId matmul(NodeId a, NodeId b);  // [n x k] * [k x m]
    NodeId transpose(NodeId a);
    NodeId relu(NodeId a);  // subgradient at 0 is 0
    NodeId exp(NodeId a);
    NodeId log(NodeId a);
    NodeId neg(NodeId a) { return scale(a, -1.0); }
    NodeId scale(NodeId a, double factor);

    NodeId sum_all(NodeId a);   // [n x m] -> [1 x 1]
    NodeId row_sums(NodeId a);  // [n x m] -> [n x 1]
    NodeId col_sums(NodeId a);  // [n x m] -> [1 x m]

    NodeId repeat_rows(NodeId a, Eigen::Index n);    // [1 x m] -> [n x m]
    NodeId repeat_cols(NodeId a, Eigen::Index m);    // [n x 1] -> [n x m]
    NodeId repeat_scalar(NodeId a, Eigen::Index n, Eigen::Index m);  // [1 x 1] -> [n x m]

    /// picked[i, 0] = a[i, labels[i]]
    NodeId gather_labels(NodeId a, std::vector<std::int32_t> labels);
    /// out[i, labels[i]] = a[i, 0], zero elsewhere; [n x 1] -> [n x cols]
    NodeId scatter_labels(NodeId a, std::vector<std::int32_t> labels, Eigen::Index cols);

    /// Value copy with gradient flow cut.
    NodeId detach(NodeId a);

    const Mat& value(NodeId id) const;
    bool requires_grad(NodeId id) const;

    /// d(loss)/d(wrt[i]) for a scalar loss, as new differentiable nodes.
    /// A wrt entry the loss does not depend on yields a zero matrix; if the
    /// loss depends on none of them, throws ValidationError.
    std::vector<NodeId> gradient(NodeId loss, std::span<const NodeId> wrt);

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    enum class Op : std::uint8_t {
        Constant, Leaf, Add, Sub, Mul, Div, MatMul, Transpose, Relu, Exp, Log,
        Scale, SumAll, RowSums, ColSums, RepeatRows, RepeatCols, RepeatScalar,
        Gather, Scatter,
    };

    struct Node {
        Op op;
        NodeId a = kNoNode;
        NodeId b = kNoNode;
        bool requires_grad = false;
        double factor = 0.0;  // Scale
        std::shared_ptr<const std::vector<std::int32_t>> labels;  // Gather/Scatter
        Mat value;
    };

    NodeId push(Op op, NodeId a, NodeId b, Mat value);
    const Node& node(NodeId id) const;
    void check_same_shape(NodeId a, NodeId b, const char* op_name) const;
    void accumulate(std::vector<NodeId>& adjoint, NodeId target, NodeId contribution);

    std::vector<Node> nodes_;
};

}  // namespace metatask
