#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>

namespace vlanet {

/// Dense rank-2 storage used for every tensor. Vectors are 1xN or Nx1,
/// scalars are 1x1.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Shape {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;

  friend bool operator==(const Shape&, const Shape&) = default;
  std::string str() const;
};

inline Shape shape_of(const Matrix& m) { return {m.rows(), m.cols()}; }

bool all_finite(const Matrix& m);

/// Rows scaled to unit L2 norm; rows with norm below kNormEpsilon become zero.
Matrix normalize_rows(const Matrix& m);

inline constexpr double kNormEpsilon = 1e-12;

}  // namespace vlanet
