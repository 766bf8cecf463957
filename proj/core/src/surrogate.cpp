#include "vlanet/surrogate.hpp"
#include "vlanet/error.hpp"

namespace vlanet {

namespace {

Matrix grid_similarities(const Graph& graph, NodeId grid_features, const ProposalGrid& grid,
                         NodeId final_query) {
  const Matrix& features = graph.value(grid_features);
  const Matrix& w = graph.value(final_query);
  if (features.rows() != static_cast<Eigen::Index>(grid.size())) {
    throw ShapeError("select_surrogates: grid has " + std::to_string(grid.size()) +
                     " proposals but features are " + shape_of(features).str());
  }
  if (w.rows() != 1 || w.cols() != features.cols()) {
    throw ShapeError("select_surrogates: shape mismatch " + shape_of(features).str() + " vs " +
                     shape_of(w).str());
  }
  return features * w.transpose();
}

}  // namespace

std::vector<std::size_t> argmax_scales(const Matrix& similarities, std::size_t groups,
                                       std::size_t scales) {
  if (static_cast<std::size_t>(similarities.size()) != groups * scales) {
    throw ShapeError("argmax_scales: expected " + std::to_string(groups * scales) +
                     " similarities, got " + std::to_string(similarities.size()));
  }
  std::vector<std::size_t> chosen(groups, 0);
  for (std::size_t k = 0; k < groups; ++k) {
    double best = similarities.data()[k];
    for (std::size_t l = 1; l < scales; ++l) {
      const double s = similarities.data()[l * groups + k];
      if (s > best) {
        best = s;
        chosen[k] = l;
      }
    }
  }
  return chosen;
}

SurrogateSet select_surrogates(Graph& graph, NodeId grid_features, const ProposalGrid& grid,
                               NodeId final_query) {
  const Matrix sims = grid_similarities(graph, grid_features, grid, final_query);
  const std::size_t groups = grid.group_count();

  SurrogateSet out;
  out.chosen_scale = argmax_scales(sims, groups, grid.scales);
  std::vector<Eigen::Index> rows(groups);
  for (std::size_t k = 0; k < groups; ++k) {
    const std::size_t l = out.chosen_scale[k];
    rows[k] = static_cast<Eigen::Index>(grid.row(l, k));
    out.group.push_back(k);
    out.chosen_interval.push_back(grid.interval(l, k));
    out.similarity.push_back(sims(rows[k], 0));
  }
  out.features = graph.select_rows(grid_features, std::move(rows), Routing::kArgmax);
  return out;
}

SurrogateSet all_proposals(Graph& graph, NodeId grid_features, const ProposalGrid& grid,
                           NodeId final_query) {
  const Matrix sims = grid_similarities(graph, grid_features, grid, final_query);
  SurrogateSet out;
  out.features = grid_features;
  for (std::size_t l = 0; l < grid.scales; ++l) {
    for (std::size_t k = 0; k < grid.group_count(); ++k) {
      out.chosen_scale.push_back(l);
      out.group.push_back(k);
      out.chosen_interval.push_back(grid.interval(l, k));
      out.similarity.push_back(sims(static_cast<Eigen::Index>(grid.row(l, k)), 0));
    }
  }
  return out;
}

}  // namespace vlanet
