#include "vlanet/autodiff.hpp"
#include "vlanet/error.hpp"

#include <cmath>
#include <cstring>

namespace vlanet {

namespace {

[[noreturn]] void shape_mismatch(OpKind kind, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op_name(kind)) + ": shape mismatch " + shape_of(a).str() +
                   " vs " + shape_of(b).str());
}

bool is_vector(const Matrix& m) { return m.rows() == 1 || m.cols() == 1; }

void accumulate(Matrix& slot, const Matrix& delta) {
  if (slot.size() == 0) {
    slot = delta;
  } else {
    slot += delta;
  }
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kMatMulBT: return "matmul_bt";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kAddRow: return "add_row";
    case OpKind::kAffine: return "affine";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kRelu: return "relu";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kNormalizeRows: return "normalize_rows";
    case OpKind::kColumnSum: return "column_sum";
    case OpKind::kRowSum: return "row_sum";
    case OpKind::kSumAll: return "sum_all";
    case OpKind::kDot: return "dot";
    case OpKind::kSelectRows: return "select_rows";
    case OpKind::kScaleRows: return "scale_rows";
    case OpKind::kConcatRows: return "concat_rows";
  }
  return "unknown";
}

NodeId Graph::push(Node node) {
  nodes_.push_back(std::move(node));
  return NodeId{nodes_.size() - 1};
}

const Graph::Node& Graph::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw Error("graph: dangling node id " + std::to_string(id.index));
  return nodes_[id.index];
}

double Graph::scalar(NodeId id) const {
  const Matrix& v = node(id).value;
  if (v.size() != 1) throw ShapeError("scalar: node has shape " + shape_of(v).str());
  return v(0, 0);
}

NodeId Graph::constant(Matrix value) {
  Node n;
  n.kind = OpKind::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Graph::parameter(const std::string& path, const Matrix& value) {
  if (auto it = parameter_index_.find(path); it != parameter_index_.end()) {
    return NodeId{it->second};
  }
  Node n;
  n.kind = OpKind::kParameter;
  n.value = value;
  n.path = path;
  NodeId id = push(std::move(n));
  parameter_index_.emplace(path, id.index);
  return id;
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Matrix& x = node(a).value;
  const Matrix& y = node(b).value;
  if (x.cols() != y.rows()) shape_mismatch(OpKind::kMatMul, x, y);
  Node n;
  n.kind = OpKind::kMatMul;
  n.inputs = {a.index, b.index};
  n.value.noalias() = x * y;
  return push(std::move(n));
}

NodeId Graph::matmul_bt(NodeId a, NodeId b) {
  const Matrix& x = node(a).value;
  const Matrix& y = node(b).value;
  if (x.cols() != y.cols()) shape_mismatch(OpKind::kMatMulBT, x, y);
  Node n;
  n.kind = OpKind::kMatMulBT;
  n.inputs = {a.index, b.index};
  n.value.noalias() = x * y.transpose();
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Matrix& x = node(a).value;
  const Matrix& y = node(b).value;
  if (shape_of(x) != shape_of(y)) shape_mismatch(OpKind::kAdd, x, y);
  Node n;
  n.kind = OpKind::kAdd;
  n.inputs = {a.index, b.index};
  n.value = x + y;
  return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  const Matrix& x = node(a).value;
  const Matrix& y = node(b).value;
  if (shape_of(x) != shape_of(y)) shape_mismatch(OpKind::kSub, x, y);
  Node n;
  n.kind = OpKind::kSub;
  n.inputs = {a.index, b.index};
  n.value = x - y;
  return push(std::move(n));
}

NodeId Graph::mul(NodeId a, NodeId b) {
  const Matrix& x = node(a).value;
  const Matrix& y = node(b).value;
  if (shape_of(x) != shape_of(y)) shape_mismatch(OpKind::kMul, x, y);
  Node n;
  n.kind = OpKind::kMul;
  n.inputs = {a.index, b.index};
  n.value = x.cwiseProduct(y);
  return push(std::move(n));
}

NodeId Graph::add_row(NodeId x, NodeId bias) {
  const Matrix& m = node(x).value;
  const Matrix& b = node(bias).value;
  if (b.rows() != 1 || b.cols() != m.cols()) shape_mismatch(OpKind::kAddRow, m, b);
  Node n;
  n.kind = OpKind::kAddRow;
  n.inputs = {x.index, bias.index};
  n.value = m.rowwise() + b.row(0);
  return push(std::move(n));
}

NodeId Graph::affine(NodeId x, double scale, double shift) {
  Node n;
  n.kind = OpKind::kAffine;
  n.inputs = {x.index};
  n.scale = scale;
  n.shift = shift;
  n.value = (node(x).value.array() * scale + shift).matrix();
  return push(std::move(n));
}

NodeId Graph::tanh(NodeId x) {
  Node n;
  n.kind = OpKind::kTanh;
  n.inputs = {x.index};
  n.value = node(x).value.array().tanh().matrix();
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId x) {
  Node n;
  n.kind = OpKind::kSigmoid;
  n.inputs = {x.index};
  n.value = node(x).value.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
  Node n;
  n.kind = OpKind::kRelu;
  n.inputs = {x.index};
  n.value = node(x).value.cwiseMax(0.0);
  return push(std::move(n));
}

NodeId Graph::softmax(NodeId x) {
  const Matrix& v = node(x).value;
  if (!is_vector(v) || v.size() == 0) {
    throw ShapeError("softmax: expected a non-empty vector, got " + shape_of(v).str());
  }
  Node n;
  n.kind = OpKind::kSoftmax;
  n.inputs = {x.index};
  const double top = v.maxCoeff();
  n.value = (v.array() - top).exp().matrix();
  n.value /= n.value.sum();
  return push(std::move(n));
}

NodeId Graph::normalize_rows(NodeId x) {
  Node n;
  n.kind = OpKind::kNormalizeRows;
  n.inputs = {x.index};
  n.value = vlanet::normalize_rows(node(x).value);
  return push(std::move(n));
}

NodeId Graph::column_sum(NodeId x) {
  Node n;
  n.kind = OpKind::kColumnSum;
  n.inputs = {x.index};
  n.value = node(x).value.colwise().sum();
  return push(std::move(n));
}

NodeId Graph::row_sum(NodeId x) {
  Node n;
  n.kind = OpKind::kRowSum;
  n.inputs = {x.index};
  n.value = node(x).value.rowwise().sum();
  return push(std::move(n));
}

NodeId Graph::sum_all(NodeId x) {
  Node n;
  n.kind = OpKind::kSumAll;
  n.inputs = {x.index};
  n.value = Matrix::Constant(1, 1, node(x).value.sum());
  return push(std::move(n));
}

NodeId Graph::dot(NodeId a, NodeId b) {
  const Matrix& x = node(a).value;
  const Matrix& y = node(b).value;
  if (shape_of(x) != shape_of(y)) shape_mismatch(OpKind::kDot, x, y);
  Node n;
  n.kind = OpKind::kDot;
  n.inputs = {a.index, b.index};
  n.value = Matrix::Constant(1, 1, x.cwiseProduct(y).sum());
  return push(std::move(n));
}

NodeId Graph::select_rows(NodeId x, std::vector<Eigen::Index> rows, Routing routing) {
  const Matrix& m = node(x).value;
  Node n;
  n.kind = OpKind::kSelectRows;
  n.inputs = {x.index};
  n.value.resize(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= m.rows()) {
      throw ShapeError("select_rows: row " + std::to_string(rows[i]) + " out of range for " +
                       shape_of(m).str());
    }
    n.value.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  }
  n.rows = std::move(rows);
  n.routing = routing;
  return push(std::move(n));
}

NodeId Graph::scale_rows(NodeId x, NodeId weights) {
  const Matrix& m = node(x).value;
  const Matrix& w = node(weights).value;
  if (!is_vector(w) || w.size() != m.rows()) shape_mismatch(OpKind::kScaleRows, m, w);
  Node n;
  n.kind = OpKind::kScaleRows;
  n.inputs = {x.index, weights.index};
  n.value = m;
  for (Eigen::Index r = 0; r < m.rows(); ++r) n.value.row(r) *= w(r);
  return push(std::move(n));
}

NodeId Graph::concat_rows(std::span<const NodeId> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const Eigen::Index cols = node(parts.front()).value.cols();
  Eigen::Index rows = 0;
  for (NodeId p : parts) {
    const Matrix& m = node(p).value;
    if (m.cols() != cols) shape_mismatch(OpKind::kConcatRows, node(parts.front()).value, m);
    rows += m.rows();
  }
  Node n;
  n.kind = OpKind::kConcatRows;
  n.value.resize(rows, cols);
  Eigen::Index at = 0;
  for (NodeId p : parts) {
    const Matrix& m = node(p).value;
    n.value.middleRows(at, m.rows()) = m;
    at += m.rows();
    n.inputs.push_back(p.index);
  }
  return push(std::move(n));
}

std::vector<Eigen::Index> Graph::routing_signature() const {
  std::vector<Eigen::Index> sig;
  for (const Node& n : nodes_) {
    if (n.kind == OpKind::kSelectRows && n.routing == Routing::kArgmax) {
      sig.insert(sig.end(), n.rows.begin(), n.rows.end());
    }
  }
  return sig;
}

GradientMap Graph::backward(NodeId loss) const {
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + shape_of(root.value).str());
  }

  std::vector<Matrix> grads(loss.index + 1);
  grads[loss.index] = Matrix::Ones(1, 1);

  for (std::size_t i = loss.index + 1; i-- > 0;) {
    const Matrix& g = grads[i];
    if (g.size() == 0) continue;
    const Node& n = nodes_[i];
    const auto& in = n.inputs;
    switch (n.kind) {
      case OpKind::kConstant:
      case OpKind::kParameter:
        break;
      case OpKind::kMatMul: {
        const Matrix& a = nodes_[in[0]].value;
        const Matrix& b = nodes_[in[1]].value;
        accumulate(grads[in[0]], g * b.transpose());
        accumulate(grads[in[1]], a.transpose() * g);
        break;
      }
      case OpKind::kMatMulBT: {
        const Matrix& a = nodes_[in[0]].value;
        const Matrix& b = nodes_[in[1]].value;
        accumulate(grads[in[0]], g * b);
        accumulate(grads[in[1]], g.transpose() * a);
        break;
      }
      case OpKind::kAdd:
        accumulate(grads[in[0]], g);
        accumulate(grads[in[1]], g);
        break;
      case OpKind::kSub:
        accumulate(grads[in[0]], g);
        accumulate(grads[in[1]], -g);
        break;
      case OpKind::kMul:
        accumulate(grads[in[0]], g.cwiseProduct(nodes_[in[1]].value));
        accumulate(grads[in[1]], g.cwiseProduct(nodes_[in[0]].value));
        break;
      case OpKind::kAddRow:
        accumulate(grads[in[0]], g);
        accumulate(grads[in[1]], g.colwise().sum());
        break;
      case OpKind::kAffine:
        accumulate(grads[in[0]], g * n.scale);
        break;
      case OpKind::kTanh:
        accumulate(grads[in[0]],
                   g.cwiseProduct((1.0 - n.value.array().square()).matrix()));
        break;
      case OpKind::kSigmoid:
        accumulate(grads[in[0]],
                   g.cwiseProduct((n.value.array() * (1.0 - n.value.array())).matrix()));
        break;
      case OpKind::kRelu: {
        const Matrix& x = nodes_[in[0]].value;
        accumulate(grads[in[0]], g.cwiseProduct((x.array() > 0.0).cast<double>().matrix()));
        break;
      }
      case OpKind::kSoftmax: {
        const double inner = g.cwiseProduct(n.value).sum();
        accumulate(grads[in[0]], n.value.cwiseProduct((g.array() - inner).matrix()));
        break;
      }
      case OpKind::kNormalizeRows: {
        const Matrix& x = nodes_[in[0]].value;
        Matrix dx = Matrix::Zero(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          const double norm = x.row(r).norm();
          if (norm < kNormEpsilon) continue;
          const double along = n.value.row(r).dot(g.row(r));
          dx.row(r) = (g.row(r) - along * n.value.row(r)) / norm;
        }
        accumulate(grads[in[0]], dx);
        break;
      }
      case OpKind::kColumnSum: {
        const Matrix& x = nodes_[in[0]].value;
        accumulate(grads[in[0]], g.replicate(x.rows(), 1));
        break;
      }
      case OpKind::kRowSum: {
        const Matrix& x = nodes_[in[0]].value;
        accumulate(grads[in[0]], g.replicate(1, x.cols()));
        break;
      }
      case OpKind::kSumAll: {
        const Matrix& x = nodes_[in[0]].value;
        accumulate(grads[in[0]], Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
        break;
      }
      case OpKind::kDot:
        accumulate(grads[in[0]], g(0, 0) * nodes_[in[1]].value);
        accumulate(grads[in[1]], g(0, 0) * nodes_[in[0]].value);
        break;
      case OpKind::kSelectRows: {
        const Matrix& x = nodes_[in[0]].value;
        Matrix dx = Matrix::Zero(x.rows(), x.cols());
        for (std::size_t k = 0; k < n.rows.size(); ++k) {
          dx.row(n.rows[k]) += g.row(static_cast<Eigen::Index>(k));
        }
        accumulate(grads[in[0]], dx);
        break;
      }
      case OpKind::kScaleRows: {
        const Matrix& x = nodes_[in[0]].value;
        const Matrix& w = nodes_[in[1]].value;
        Matrix dx = g;
        Matrix dw(w.rows(), w.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          dx.row(r) *= w(r);
          dw(r) = g.row(r).dot(x.row(r));
        }
        accumulate(grads[in[0]], dx);
        accumulate(grads[in[1]], dw);
        break;
      }
      case OpKind::kConcatRows: {
        Eigen::Index at = 0;
        for (std::size_t src : in) {
          const Eigen::Index rows = nodes_[src].value.rows();
          accumulate(grads[src], g.middleRows(at, rows));
          at += rows;
        }
        break;
      }
    }
  }

  GradientMap out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.kind != OpKind::kParameter) continue;
    if (i < grads.size() && grads[i].size() != 0) {
      out.set(n.path, grads[i]);
    } else {
      out.set(n.path, Matrix::Zero(n.value.rows(), n.value.cols()));
    }
  }
  return out;
}

}  // namespace vlanet
