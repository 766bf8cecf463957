#pragma once

#include "vlanet/attention.hpp"
#include "vlanet/encoders.hpp"
#include "vlanet/surrogate.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace vlanet {

struct ModelConfig {
  std::size_t embed_dim = 32;      // token embedding size
  std::size_t raw_dim = 32;        // frame feature size
  std::size_t hidden_dim = 64;     // GRU state size
  std::size_t model_dim = 64;      // joint space D
  std::size_t attention_dim = 64;  // D_a
  CcaOptions cca;
  /// false scores every grid proposal instead of one surrogate per group.
  bool use_surrogate = true;

  friend bool operator==(const ModelConfig& a, const ModelConfig& b) {
    return a.embed_dim == b.embed_dim && a.raw_dim == b.raw_dim &&
           a.hidden_dim == b.hidden_dim && a.model_dim == b.model_dim &&
           a.attention_dim == b.attention_dim &&
           a.cca.cascade_iterations == b.cca.cascade_iterations &&
           a.cca.share_cascade_weights == b.cca.share_cascade_weights &&
           a.use_surrogate == b.use_surrogate;
  }
};

/// Every parameter path with its expected shape.
std::map<std::string, Shape> parameter_shapes(const ModelConfig& config);

/// Weights uniform in [-a, a], a = sqrt(6 / (fan_in + fan_out)); biases zero.
ParamTree init_params(const ModelConfig& config, std::uint64_t seed);

/// Throws ShapeError listing the first mismatching path if params were not
/// built for config.
void check_compatible(const ParamTree& params, const ModelConfig& config);

struct PipelineOutput {
  QueryRepr query;
  SurrogateSet candidates;
  CcaOutput cca;
};

/// Query encoding, candidate selection and cascaded attention for one
/// (video, query) pair. grid_features is the projected grid of the video,
/// which may be shared by several queries in one graph.
PipelineOutput run_pipeline(Graph& graph, NodeId grid_features, const ProposalGrid& grid,
                            const Matrix& tokens, const ParamTree& params,
                            const ModelConfig& config);

}  // namespace vlanet
