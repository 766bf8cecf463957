#include "vlanet/model.hpp"
#include "vlanet/error.hpp"

#include <cmath>
#include <random>

namespace vlanet {

std::map<std::string, Shape> parameter_shapes(const ModelConfig& c) {
  const auto e = static_cast<Eigen::Index>(c.embed_dim);
  const auto h = static_cast<Eigen::Index>(c.hidden_dim);
  const auto r = static_cast<Eigen::Index>(c.raw_dim);
  const auto d = static_cast<Eigen::Index>(c.model_dim);
  const auto a = static_cast<Eigen::Index>(c.attention_dim);

  std::map<std::string, Shape> shapes;
  for (const char* w : {paths::kGruWz, paths::kGruWr, paths::kGruWn}) shapes[w] = {e, h};
  for (const char* u : {paths::kGruUz, paths::kGruUr, paths::kGruUn}) shapes[u] = {h, h};
  for (const char* b : {paths::kGruBz, paths::kGruBr, paths::kGruBn}) shapes[b] = {1, h};
  shapes[paths::kQueryWeight] = {h, d};
  shapes[paths::kQueryBias] = {1, d};
  shapes[paths::kVideoWeight] = {r, d};
  shapes[paths::kVideoBias] = {1, d};
  for (const std::string& stage : cca_parameter_stages(c.cca)) {
    shapes[stage_w1(stage)] = {a, d};
    shapes[stage_w2(stage)] = {a, d};
  }
  return shapes;
}

ParamTree init_params(const ModelConfig& config, std::uint64_t seed) {
  if (config.embed_dim == 0 || config.raw_dim == 0 || config.hidden_dim == 0 ||
      config.model_dim == 0 || config.attention_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  ParamTree params;
  for (const auto& [path, shape] : parameter_shapes(config)) {
    if (path.find(".b_") != std::string::npos || path.ends_with(".bias")) {
      params.set(path, Matrix::Zero(shape.rows, shape.cols));
      continue;
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(shape.rows + shape.cols));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    Matrix m(shape.rows, shape.cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng);
    params.set(path, std::move(m));
  }
  return params;
}

void check_compatible(const ParamTree& params, const ModelConfig& config) {
  const auto shapes = parameter_shapes(config);
  for (const auto& [path, shape] : shapes) {
    if (!params.contains(path)) throw ShapeError("parameter '" + path + "' missing");
    const Shape actual = shape_of(params.at(path));
    if (actual != shape) {
      throw ShapeError("parameter '" + path + "' has shape " + actual.str() + ", expected " +
                       shape.str());
    }
  }
  if (params.size() != shapes.size()) {
    throw ShapeError("parameter tree has " + std::to_string(params.size()) +
                     " tensors, expected " + std::to_string(shapes.size()));
  }
}

PipelineOutput run_pipeline(Graph& graph, NodeId grid_features, const ProposalGrid& grid,
                            const Matrix& tokens, const ParamTree& params,
                            const ModelConfig& config) {
  PipelineOutput out;
  out.query = gru_encode(graph, tokens, params);
  out.candidates = config.use_surrogate
                       ? select_surrogates(graph, grid_features, grid, out.query.final)
                       : all_proposals(graph, grid_features, grid, out.query.final);
  out.cca = cascaded_attention(graph, out.candidates.features, out.query.states, params,
                               config.cca);
  return out;
}

}  // namespace vlanet
