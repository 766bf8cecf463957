#include "vlanet/encoders.hpp"
#include "vlanet/error.hpp"


namespace vlanet {

QueryRepr gru_encode(Graph& graph, const Matrix& tokens, const ParamTree& params) {
  if (tokens.rows() == 0) throw ShapeError("gru_encode: empty token list");
  const Matrix& wz = params.at(paths::kGruWz);
  if (tokens.cols() != wz.rows()) {
    throw ShapeError("gru_encode: token dim " + std::to_string(tokens.cols()) +
                     " does not match GRU input dim " + std::to_string(wz.rows()));
  }
  const Eigen::Index hidden = wz.cols();

  const NodeId x = graph.constant(tokens);
  // Input-side transforms for all steps at once; rows are picked per step.
  const NodeId xz = graph.matmul(x, graph.parameter(params, paths::kGruWz));
  const NodeId xr = graph.matmul(x, graph.parameter(params, paths::kGruWr));
  const NodeId xn = graph.matmul(x, graph.parameter(params, paths::kGruWn));
  const NodeId uz = graph.parameter(params, paths::kGruUz);
  const NodeId ur = graph.parameter(params, paths::kGruUr);
  const NodeId un = graph.parameter(params, paths::kGruUn);
  const NodeId bz = graph.parameter(params, paths::kGruBz);
  const NodeId br = graph.parameter(params, paths::kGruBr);
  const NodeId bn = graph.parameter(params, paths::kGruBn);

  NodeId h = graph.constant(Matrix::Zero(1, hidden));
  std::vector<NodeId> states;
  states.reserve(static_cast<std::size_t>(tokens.rows()));
  for (Eigen::Index m = 0; m < tokens.rows(); ++m) {
    const NodeId z = graph.sigmoid(graph.add_row(
        graph.add(graph.select_rows(xz, {m}), graph.matmul(h, uz)), bz));
    const NodeId r = graph.sigmoid(graph.add_row(
        graph.add(graph.select_rows(xr, {m}), graph.matmul(h, ur)), br));
    const NodeId n = graph.tanh(graph.add_row(
        graph.add(graph.select_rows(xn, {m}), graph.matmul(graph.mul(r, h), un)), bn));
    // (1 - z) * n + z * h  ==  n + z * (h - n)
    h = graph.add(n, graph.mul(z, graph.sub(h, n)));
    states.push_back(h);
  }

  const NodeId stacked = graph.concat_rows(states);
  const NodeId projected = graph.add_row(
      graph.matmul(stacked, graph.parameter(params, paths::kQueryWeight)),
      graph.parameter(params, paths::kQueryBias));
  QueryRepr out;
  out.states = graph.normalize_rows(projected);
  out.words = states.size();
  out.final = graph.select_rows(out.states, {tokens.rows() - 1});
  return out;
}

Matrix pool_proposals(const Matrix& frames, const ProposalGrid& grid) {
  const Eigen::Index frame_count = frames.rows();
  // prefix.row(t) = sum of frames [0, t)
  Matrix prefix = Matrix::Zero(frame_count + 1, frames.cols());
  for (Eigen::Index t = 0; t < frame_count; ++t) prefix.row(t + 1) = prefix.row(t) + frames.row(t);

  Matrix pooled(static_cast<Eigen::Index>(grid.size()), frames.cols());
  for (std::size_t l = 0; l < grid.scales; ++l) {
    for (std::size_t k = 0; k < grid.group_count(); ++k) {
      const Interval& iv = grid.interval(l, k);
      if (!iv.valid() || iv.end > frame_count) {
        throw ShapeError("featurize_proposals: interval " + iv.str() + " outside frame range [0," +
                         std::to_string(frame_count) + ")");
      }
      pooled.row(static_cast<Eigen::Index>(grid.row(l, k))) =
          (prefix.row(iv.end) - prefix.row(iv.start)) / static_cast<double>(iv.length());
    }
  }
  return pooled;
}

NodeId project_proposals(Graph& graph, const Matrix& pooled, const ParamTree& params) {
  const Matrix& w = params.at(paths::kVideoWeight);
  if (pooled.cols() != w.rows()) {
    throw ShapeError("featurize_proposals: frame dim " + std::to_string(pooled.cols()) +
                     " does not match video projection input " + std::to_string(w.rows()));
  }
  const NodeId projected =
      graph.add_row(graph.matmul(graph.constant(pooled), graph.parameter(params, paths::kVideoWeight)),
                    graph.parameter(params, paths::kVideoBias));
  return graph.normalize_rows(projected);
}

NodeId featurize_proposals(Graph& graph, const Matrix& frames, const ProposalGrid& grid,
                           const ParamTree& params) {
  return project_proposals(graph, pool_proposals(frames, grid), params);
}

}  // namespace vlanet
