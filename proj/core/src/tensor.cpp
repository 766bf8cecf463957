#include "vlanet/tensor.hpp"
#include "vlanet/error.hpp"
#include "vlanet/params.hpp"

#include <cstring>

namespace vlanet {

std::string Shape::str() const {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix normalize_rows(const Matrix& m) {
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    // Written so a NaN norm divides through rather than zeroing the row.
    if (!(norm < kNormEpsilon)) out.row(r) = m.row(r) / norm;
  }
  return out;
}

void ParamTree::set(const std::string& path, Matrix value) {
  tensors_[path] = std::move(value);
}

const Matrix& ParamTree::at(const std::string& path) const {
  auto it = tensors_.find(path);
  if (it == tensors_.end()) throw ConfigError("unknown parameter '" + path + "'");
  return it->second;
}

Matrix& ParamTree::at(const std::string& path) {
  auto it = tensors_.find(path);
  if (it == tensors_.end()) throw ConfigError("unknown parameter '" + path + "'");
  return it->second;
}

std::size_t ParamTree::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : tensors_) n += static_cast<std::size_t>(m.size());
  return n;
}

std::vector<std::string> ParamTree::paths() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [path, _] : tensors_) out.push_back(path);
  return out;
}

bool operator==(const ParamTree& a, const ParamTree& b) {
  if (a.tensors_.size() != b.tensors_.size()) return false;
  auto ia = a.tensors_.begin();
  auto ib = b.tensors_.begin();
  for (; ia != a.tensors_.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    if (shape_of(ia->second) != shape_of(ib->second)) return false;
    if (std::memcmp(ia->second.data(), ib->second.data(),
                    sizeof(double) * static_cast<std::size_t>(ia->second.size())) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace vlanet
