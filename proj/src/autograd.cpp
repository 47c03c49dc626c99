#include "helu/autograd.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace helu::autograd {

NodeId Tape::leaf(Tensor value, std::string op) { return record(std::move(op), {}, {}, std::move(value), nullptr); }

NodeId Tape::record(std::string op, std::vector<NodeId> inputs, std::vector<Tensor> saved, Tensor value,
                    BackwardRule backward_rule) {
  const NodeId id = nodes_.size();
  for (NodeId in : inputs) {
    if (in >= id) throw GraphError(fmt::format("node '{}' references unknown input id {}", op, in));
  }
  nodes_.push_back(Node{id, std::move(op), std::move(inputs), std::move(saved), std::move(value), std::move(backward_rule)});
  return id;
}

const Node& Tape::node(NodeId id) const {
  if (id >= nodes_.size()) throw GraphError(fmt::format("no node with id {}", id));
  return nodes_[id];
}

void Tape::backprop(NodeId loss) {
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw GraphError(fmt::format("backprop needs a scalar loss, node {} has shape {}", loss, shape_str(root.value.shape())));
  }
  grads_.assign(nodes_.size(), std::nullopt);
  grads_[loss] = Tensor(root.value.shape(), 1.0);

  for (NodeId i = loss + 1; i-- > 0;) {
    if (!grads_[i] || nodes_[i].inputs.empty()) continue;
    const Node& n = nodes_[i];
    if (!n.backward_rule) throw GraphError(fmt::format("node {} ('{}') has inputs but no backward rule", i, n.op));
    std::vector<Tensor> parts = n.backward_rule(*grads_[i], n);
    if (parts.size() != n.inputs.size()) {
      throw GraphError(fmt::format("backward of '{}' returned {} gradients for {} inputs", n.op, parts.size(), n.inputs.size()));
    }
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const NodeId in = n.inputs[k];
      if (parts[k].shape() != nodes_[in].value.shape()) {
        throw GraphError(fmt::format("backward of '{}' produced shape {} for input of shape {}", n.op,
                                     shape_str(parts[k].shape()), shape_str(nodes_[in].value.shape())));
      }
      if (grads_[in]) {
        auto acc = grads_[in]->values();
        auto add = parts[k].values();
        for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += add[e];
      } else {
        grads_[in] = std::move(parts[k]);
      }
    }
  }
}

Tensor Tape::grad(NodeId id) const {
  if (has_grad(id)) return *grads_[id];
  return Tensor(node(id).value.shape(), 0.0);
}

NodeId add(Tape& tape, NodeId a, NodeId b) {
  Tensor v = tape.value(a) + tape.value(b);
  return tape.record("add", {a, b}, {}, std::move(v),
                     [](const Tensor& g, const Node&) { return std::vector<Tensor>{g, g}; });
}

NodeId mul(Tape& tape, NodeId a, NodeId b) {
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  return tape.record("mul", {a, b}, {x, y}, hadamard(x, y), [](const Tensor& g, const Node& n) {
    return std::vector<Tensor>{hadamard(g, n.saved[1]), hadamard(g, n.saved[0])};
  });
}

NodeId scale(Tape& tape, NodeId a, double s) {
  return tape.record("scale", {a}, {}, s * tape.value(a),
                     [s](const Tensor& g, const Node&) { return std::vector<Tensor>{s * g}; });
}

NodeId square(Tape& tape, NodeId a) {
  const Tensor& x = tape.value(a);
  return tape.record("square", {a}, {x}, hadamard(x, x), [](const Tensor& g, const Node& n) {
    return std::vector<Tensor>{hadamard(2.0 * n.saved[0], g)};
  });
}

NodeId sum(Tape& tape, NodeId a) {
  const Tensor& x = tape.value(a);
  Shape in_shape = x.shape();
  return tape.record("sum", {a}, {}, Tensor::scalar(sum_all(x)), [in_shape](const Tensor& g, const Node&) {
    return std::vector<Tensor>{Tensor(in_shape, g.item())};
  });
}

NodeId matmul(Tape& tape, NodeId a, NodeId b) {
  const Tensor& x = tape.value(a);
  const Tensor& y = tape.value(b);
  return tape.record("matmul", {a, b}, {x, y}, helu::matmul(x, y), [](const Tensor& g, const Node& n) {
    return std::vector<Tensor>{helu::matmul(g, transpose(n.saved[1])), helu::matmul(transpose(n.saved[0]), g)};
  });
}

NodeId linear(Tape& tape, NodeId x, NodeId weight, NodeId bias) {
  const Tensor& in = tape.value(x);
  const Tensor& w = tape.value(weight);
  Tensor z = add_row_vector(helu::matmul(in, transpose(w)), tape.value(bias));
  return tape.record("linear", {x, weight, bias}, {in, w}, std::move(z), [](const Tensor& g, const Node& n) {
    const Tensor& saved_x = n.saved[0];
    const Tensor& saved_w = n.saved[1];
    return std::vector<Tensor>{helu::matmul(g, saved_w), helu::matmul(transpose(g), saved_x), reduce_sum(g, 0)};
  });
}

NodeId activation(Tape& tape, const ActivationSpec& spec, NodeId z) {
  const Tensor& pre = tape.value(z);
  return tape.record(to_string(spec), {z}, {pre}, forward(spec, pre), [spec](const Tensor& g, const Node& n) {
    return std::vector<Tensor>{backward(spec, n.saved[0], g)};
  });
}

Tensor log_softmax_rows(const Tensor& logits) {
  const std::size_t rows = logits.rows(), cols = logits.cols();
  Tensor out(logits.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = logits.at(r, 0);
    for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, logits.at(r, c));
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += std::exp(logits.at(r, c) - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = logits.at(r, c) - lse;
  }
  return out;
}

NodeId softmax_cross_entropy(Tape& tape, NodeId logits, std::vector<int> labels) {
  const Tensor& x = tape.value(logits);
  const std::size_t rows = x.rows(), cols = x.cols();
  if (labels.size() != rows) {
    throw DimensionError(fmt::format("softmax_cross_entropy: {} labels for {} rows", labels.size(), rows));
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= cols) {
      throw DataError(fmt::format("label {} outside class range [0, {})", y, cols));
    }
  }
  Tensor logp = log_softmax_rows(x);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) loss -= logp.at(r, static_cast<std::size_t>(labels[r]));
  loss /= static_cast<double>(rows);

  return tape.record("softmax_xent", {logits}, {logp}, Tensor::scalar(loss),
                     [labels = std::move(labels)](const Tensor& g, const Node& n) {
                       const Tensor& lp = n.saved[0];
                       const double k = g.item() / static_cast<double>(lp.rows());
                       Tensor d(lp.shape());
                       for (std::size_t r = 0; r < lp.rows(); ++r) {
                         for (std::size_t c = 0; c < lp.cols(); ++c) d.at(r, c) = std::exp(lp.at(r, c)) * k;
                         d.at(r, static_cast<std::size_t>(labels[r])) -= k;
                       }
                       return std::vector<Tensor>{std::move(d)};
                     });
}

}  // namespace helu::autograd
