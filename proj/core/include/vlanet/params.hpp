#pragma once

#include "vlanet/tensor.hpp"

#include <map>
#include <string>
#include <vector>

namespace vlanet {

/// Named parameter tensors keyed by canonical path (e.g. "cca.v2v.w1").
/// Iteration order is the lexicographic path order, which fixes the layout
/// of checkpoints and optimizer state.
class ParamTree {
 public:
  void set(const std::string& path, Matrix value);
  const Matrix& at(const std::string& path) const;
  Matrix& at(const std::string& path);
  bool contains(const std::string& path) const { return tensors_.contains(path); }

  std::size_t size() const { return tensors_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::string> paths() const;

  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }
  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }

  /// Bitwise equality of paths, shapes and values.
  friend bool operator==(const ParamTree& a, const ParamTree& b);

 private:
  std::map<std::string, Matrix> tensors_;
};

/// d(loss)/d(leaf) per parameter path; same shapes as the leaves.
using GradientMap = ParamTree;

}  // namespace vlanet
