#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "beac/tensor.hpp"

namespace beac::ad {

using Bindings = std::map<std::string, Tensor, std::less<>>;
using NodeId = std::size_t;

enum class OpKind {
  input,
  parameter,
  constant,
  matmul,
  add,
  sub,
  mul,
  tanh,
  sigmoid,
  concat_cols,
  concat_rows,
  slice_cols,
  slice_rows,
  squared_error,
  bce_logits,
  scale,
  sum,
};

std::string_view op_name(OpKind op);

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Define-then-run tape. Nodes are appended in creation order, which is a
// topological order, so forward and backward are single linear sweeps.
class Graph {
 public:
  // Free inputs and parameters are looked up by name in the bindings passed
  // to forward(). Declaring the same name twice returns the same node.
  NodeId input(const std::string& name);
  NodeId parameter(const std::string& name);
  NodeId constant(Tensor value, std::string label = {});

  NodeId matmul(NodeId a, NodeId b);
  // b may be a single row [1,n], broadcast over the rows of a.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId concat_cols(std::vector<NodeId> parts);
  NodeId concat_rows(std::vector<NodeId> parts);
  NodeId slice_cols(NodeId a, std::size_t begin, std::size_t end);
  NodeId slice_rows(NodeId a, std::size_t begin, std::size_t end);
  // sum_i w_i * sum_j (pred_ij - target_ij)^2 ; weights is [rows,1] and is
  // not differentiated.
  NodeId squared_error(NodeId pred, NodeId target, NodeId weights);
  // sum_i w_i * sum_j BCE(sigmoid(logit_ij), target_ij), evaluated on logits.
  NodeId bce_logits(NodeId logits, NodeId target, NodeId weights);
  NodeId scale(NodeId a, double factor);
  NodeId sum(NodeId a);

  // Attach a label used in error messages.
  void label(NodeId id, std::string text);

  const Tensor& forward(const Bindings& bindings);
  const Tensor& value(NodeId id) const;
  bool has_run() const { return forwarded_; }

  // Gradients of a scalar node with respect to every declared parameter and
  // input (zero when unreachable).
  Bindings backward(NodeId loss);
  // Gradient accumulated at any node by the last backward().
  Tensor gradient(NodeId id) const;

  std::size_t size() const { return nodes_.size(); }
  OpKind kind(NodeId id) const { return nodes_.at(id).op; }

 private:
  struct Node {
    OpKind op;
    std::vector<NodeId> in;
    std::string label{};
    double factor = 0.0;
    std::size_t lo = 0, hi = 0;
    Tensor value{};
    std::vector<double> grad{};
  };

  NodeId push(Node node);
  void check_id(NodeId id) const;
  std::string describe(NodeId id) const;
  void eval(NodeId id, const Bindings& bindings);
  std::vector<double>& grad_buffer(NodeId id);
  void propagate(NodeId id);

  std::vector<Node> nodes_;
  std::map<std::string, NodeId, std::less<>> named_;
  bool forwarded_ = false;
  bool backwarded_ = false;
};

}  // namespace beac::ad
