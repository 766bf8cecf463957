#pragma once

#include "vlanet/gradcheck.hpp"
#include "vlanet/training.hpp"

#include <cstdint>

namespace vlanet {

/// A small random instance of the full contrastive loss: one video, one
/// positive and one negative query, run through selection and the cascade.
struct LossCheckProblem {
  TrainingConfig config;
  ParamTree params;
  Matrix frames;
  ProposalGrid grid;
  Matrix positive;
  Matrix negative;
  std::uint64_t seed = 0;

  NodeId build(Graph& graph, const ParamTree& values) const;
};

struct LossCheckShape {
  std::size_t dim = 8;        // D = D_a = raw = embed = hidden
  std::size_t groups = 4;     // K
  std::size_t scales = 3;     // L
  std::size_t tokens = 5;     // M
  std::size_t cascade_iterations = 2;
};

LossCheckProblem make_loss_check_problem(const LossCheckShape& shape, std::uint64_t seed);

struct LossCheckResult {
  GradCheckReport report;
  std::uint64_t seed = 0;     // seed of the instance actually checked
  std::size_t redraws = 0;
};

/// Draws instances from `seed` upward until one has no scale selection
/// within reach of the finite-difference step, then checks it.
LossCheckResult check_full_loss(const LossCheckShape& shape, std::uint64_t seed, double tolerance,
                                std::size_t max_redraws = 16);

}  // namespace vlanet
