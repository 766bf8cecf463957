#pragma once

#include "vlanet/autodiff.hpp"
#include "vlanet/proposals.hpp"

#include <vector>

namespace vlanet {

/// The video representation handed to cross-modal attention: one row per
/// candidate proposal plus where each row came from in the grid.
struct SurrogateSet {
  NodeId features;                        // rows x D
  std::vector<std::size_t> chosen_scale;  // per row
  std::vector<std::size_t> group;         // per row
  std::vector<Interval> chosen_interval;  // per row
  std::vector<double> similarity;         // p . w_M of the chosen proposal

  std::size_t size() const { return chosen_interval.size(); }
};

/// Per-group argmax over scales of a scale-major similarity vector
/// (index l * K + k). Ties go to the smallest scale.
std::vector<std::size_t> argmax_scales(const Matrix& similarities, std::size_t groups,
                                       std::size_t scales);

/// One surrogate per segment group: the scale whose unit feature has the
/// largest dot product with the final query state. Gradient reaches only
/// the selected rows.
SurrogateSet select_surrogates(Graph& graph, NodeId grid_features, const ProposalGrid& grid,
                               NodeId final_query);

/// Every grid proposal as a candidate, no selection (ablation).
SurrogateSet all_proposals(Graph& graph, NodeId grid_features, const ProposalGrid& grid,
                           NodeId final_query);

}  // namespace vlanet
