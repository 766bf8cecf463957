#pragma once

// Tape-based reverse-mode differentiation over the small primitive set the
// retrieval model needs. A Graph is built once per forward evaluation and
// discarded after backward; it is not thread-safe, but distinct graphs share
// no state.

#include "vlanet/params.hpp"
#include "vlanet/tensor.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vlanet {

struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class OpKind {
  kConstant,
  kParameter,
  kMatMul,       // A * B
  kMatMulBT,     // A * B^T
  kAdd,
  kSub,
  kMul,          // elementwise
  kAddRow,       // X + b, b broadcast over rows
  kAffine,       // a * x + b elementwise, a/b constants
  kTanh,
  kSigmoid,
  kRelu,         // max(x, 0)
  kSoftmax,      // over all elements of a vector
  kNormalizeRows,
  kColumnSum,    // N x D -> 1 x D
  kRowSum,       // N x D -> N x 1
  kSumAll,       // -> 1 x 1
  kDot,          // sum of elementwise product -> 1 x 1
  kSelectRows,
  kScaleRows,    // row n of X times w[n]
  kConcatRows,
};

std::string_view op_name(OpKind kind);

/// How a row selection was decided. Argmax-routed selections are recorded so
/// that a finite-difference check can tell when a perturbation flips them.
enum class Routing { kFixed, kArgmax };

class Graph {
 public:
  NodeId constant(Matrix value);
  /// Trainable leaf. Adding the same path twice returns the existing node.
  NodeId parameter(const std::string& path, const Matrix& value);
  NodeId parameter(const ParamTree& params, const std::string& path) {
    return parameter(path, params.at(path));
  }

  NodeId matmul(NodeId a, NodeId b);
  NodeId matmul_bt(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId add_row(NodeId x, NodeId bias);
  NodeId affine(NodeId x, double scale, double shift);
  NodeId tanh(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId relu(NodeId x);
  NodeId softmax(NodeId x);
  NodeId normalize_rows(NodeId x);
  NodeId column_sum(NodeId x);
  NodeId row_sum(NodeId x);
  NodeId sum_all(NodeId x);
  NodeId dot(NodeId a, NodeId b);
  NodeId select_rows(NodeId x, std::vector<Eigen::Index> rows,
                     Routing routing = Routing::kFixed);
  NodeId scale_rows(NodeId x, NodeId weights);
  NodeId concat_rows(std::span<const NodeId> parts);

  const Matrix& value(NodeId id) const { return nodes_.at(id.index).value; }
  double scalar(NodeId id) const;
  OpKind kind(NodeId id) const { return nodes_.at(id.index).kind; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradients of a 1x1 node with respect to every parameter leaf. Leaves
  /// that do not reach the loss get exact zeros.
  GradientMap backward(NodeId loss) const;

  /// Concatenated indices of every argmax-routed row selection, in build
  /// order. Two evaluations with equal signatures took the same route.
  std::vector<Eigen::Index> routing_signature() const;

 private:
  struct Node {
    OpKind kind = OpKind::kConstant;
    std::vector<std::size_t> inputs;
    Matrix value;
    double scale = 0.0;
    double shift = 0.0;
    std::vector<Eigen::Index> rows;
    Routing routing = Routing::kFixed;
    std::string path;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::size_t> parameter_index_;
};

}  // namespace vlanet
