#pragma once

#include "vlanet/autodiff.hpp"

#include <functional>
#include <string>
#include <vector>

namespace vlanet {

/// Builds a scalar loss from the given parameter values into a fresh graph.
/// Invoked once per perturbation, so any argmax routing is re-decided.
using LossBuilder = std::function<NodeId(Graph&, const ParamTree&)>;

struct LeafCheck {
  std::string path;
  std::size_t components = 0;
  double max_rel_error = 0.0;
  /// Components whose +h/-h evaluations took a different argmax route from
  /// the base point. They are excluded from max_rel_error.
  std::size_t tie_adjacent = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<LeafCheck> leaves;
  double max_rel_error = 0.0;
  std::size_t tie_adjacent = 0;
  double tolerance = 0.0;
  bool pass = true;
};

inline constexpr double kFiniteDiffStep = 1e-5;

/// Central-difference check of every parameter leaf the loss touches.
/// Relative error is |a - n| / max(1, |a|, |n|).
GradCheckReport finite_diff_check(const LossBuilder& build, const ParamTree& params,
                                  double tolerance, double step = kFiniteDiffStep);

std::string format_report(const GradCheckReport& report);

}  // namespace vlanet
