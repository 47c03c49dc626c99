#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "helu/activations.hpp"
#include "helu/tensor.hpp"

namespace helu::autograd {

using NodeId = std::size_t;

struct Node;

/// Maps the upstream gradient of a node to one gradient per input, in the
/// order of `Node::inputs`. The rule sees the node, so it can read `saved`.
using BackwardRule = std::function<std::vector<Tensor>(const Tensor& upstream, const Node& node)>;

struct Node {
  NodeId id = 0;
  std::string op;
  std::vector<NodeId> inputs;
  std::vector<Tensor> saved;
  Tensor value;
  BackwardRule backward_rule;
};

/// Define-by-run tape. Nodes are appended in evaluation order, so every
/// input id is smaller than the id of the node that consumes it and reverse
/// id order is a valid reverse topological order.
class Tape {
 public:
  /// A node with no inputs (parameter or data).
  NodeId leaf(Tensor value, std::string op = "leaf");

  /// Appends a node computed from `inputs`. Throws GraphError on a dangling id.
  NodeId record(std::string op, std::vector<NodeId> inputs, std::vector<Tensor> saved, Tensor value,
                BackwardRule backward_rule);

  const Node& node(NodeId id) const;
  const Tensor& value(NodeId id) const { return node(id).value; }
  std::size_t size() const { return nodes_.size(); }

  /// Reverse accumulation from a scalar loss node. Gradients from several
  /// consumers are summed in reverse id order.
  void backprop(NodeId loss);

  /// Gradient of the last backprop with respect to `id`; zeros when the node
  /// did not influence the loss.
  Tensor grad(NodeId id) const;
  bool has_grad(NodeId id) const { return id < grads_.size() && grads_[id].has_value(); }

  void zero_grads() { grads_.clear(); }

 private:
  std::vector<Node> nodes_;
  std::vector<std::optional<Tensor>> grads_;
};

NodeId add(Tape& tape, NodeId a, NodeId b);
NodeId mul(Tape& tape, NodeId a, NodeId b);
NodeId scale(Tape& tape, NodeId a, double s);
NodeId square(Tape& tape, NodeId a);
NodeId sum(Tape& tape, NodeId a);
NodeId matmul(Tape& tape, NodeId a, NodeId b);

/// x[b x in] * W^T + bias, with W stored [out x in] and bias [out].
NodeId linear(Tape& tape, NodeId x, NodeId weight, NodeId bias);

/// Saves the pre-activation `z` and routes the upstream gradient through
/// helu::backward, which for HeLU is the shifted mask rather than the
/// derivative of ReLU.
NodeId activation(Tape& tape, const ActivationSpec& spec, NodeId z);

/// Mean softmax cross-entropy over the rows of `logits`.
NodeId softmax_cross_entropy(Tape& tape, NodeId logits, std::vector<int> labels);

/// Row-wise log-softmax, stabilized by subtracting the row max.
Tensor log_softmax_rows(const Tensor& logits);

}  // namespace helu::autograd
