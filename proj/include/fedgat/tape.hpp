#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fedgat/activations.hpp"
#include "fedgat/tensor.hpp"

namespace fedgat {

using NodeId = int;
using IndexList = std::shared_ptr<const std::vector<int>>;

inline IndexList make_indices(std::vector<int> v) {
    return std::make_shared<const std::vector<int>>(std::move(v));
}

// Tape-based reverse-mode differentiation over dense tensors. Ops evaluate
// eagerly; every result is checked for NaN/Inf and a non-finite value throws
// immediately, naming the op. One tape per simulated client; tapes share no
// mutable state.
class Tape {
  public:
    enum class Op {
        leaf,
        matmul,
        transpose,
        add,
        sub,
        mul,
        div,
        scale,       // c * a
        activation,  // elementwise
        sum,         // all entries -> 1x1
        gather_rows,
        segment_sum_rows,
        rowscale,  // a(m x n) scaled per-row by v(m x 1)
        rowdiv,
        concat_rows,
        concat_cols,
        reshape,
        softmax_xent,  // masked mean cross entropy -> 1x1
    };

    struct Node {
        Op op;
        NodeId a = -1;
        NodeId b = -1;
        Tensor value;
        Tensor grad;  // sized lazily during backward
        bool requires_grad = false;
        bool grad_live = false;
        double scalar = 0.0;
        Activation act;
        std::vector<NodeId> parts;  // concat inputs
        IndexList indices;          // gather rows / segment ids / labels
        IndexList mask;             // softmax_xent masked row ids
        int segments = 0;
    };

    NodeId leaf(Tensor t, bool trainable = false);
    NodeId constant(Tensor t) { return leaf(std::move(t), false); }

    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId div(NodeId a, NodeId b);
    NodeId scale(NodeId a, double c);
    NodeId activation(NodeId a, Activation act);
    NodeId sum(NodeId a);
    NodeId gather_rows(NodeId a, IndexList rows);
    NodeId segment_sum_rows(NodeId a, IndexList segment_of_row, int n_segments);
    NodeId rowscale(NodeId a, NodeId v);
    NodeId rowdiv(NodeId a, NodeId v);
    NodeId concat_rows(std::span<const NodeId> parts);
    NodeId concat_cols(std::span<const NodeId> parts);
    NodeId reshape(NodeId a, std::int64_t rows, std::int64_t cols);
    // Mean over masked rows of -log softmax(logits)[label]. labels has one
    // entry per logits row; mask lists the row ids that contribute.
    NodeId softmax_cross_entropy(NodeId logits, IndexList labels, IndexList mask_rows);

    const Tensor& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Tensor& grad(NodeId id) const;
    bool trainable(NodeId id) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        return n.op == Op::leaf && n.requires_grad;
    }

    // Reverse accumulation from a scalar loss into every node that needs a
    // gradient. Throws if the loss is not 1 x 1.
    void backward(NodeId loss);

    // Recomputes every non-leaf value in order and verifies bit-identical
    // results against the recorded forward.
    bool replay_matches() const;

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

  private:
    NodeId push(Node n);
    Tensor eval(const Node& n) const;
    void accumulate(NodeId id, const Tensor& g);
    Tensor& grad_buffer(NodeId id);

    std::vector<Node> nodes_;
};

// Max relative error between tape gradients and central finite differences
// for a scalar function built by `build` over trainable leaves created from
// `params`. The denominator is floored to dodge 0/0 on dead coordinates.
double grad_check(const std::function<NodeId(Tape&, const std::vector<NodeId>&)>& build,
                  const std::vector<Tensor>& params, double eps);

}  // namespace fedgat
