#pragma once

#include "vlanet/autodiff.hpp"
#include "vlanet/proposals.hpp"

namespace vlanet {

/// Per-word query states after projection and L2 normalization.
struct QueryRepr {
  NodeId states;  // M x D, row m is w_m
  NodeId final;   // 1 x D, equals the last row of states
  std::size_t words = 0;
};

/// Parameter paths used by the encoders.
namespace paths {
inline constexpr const char* kGruWz = "gru.w_z";
inline constexpr const char* kGruUz = "gru.u_z";
inline constexpr const char* kGruBz = "gru.b_z";
inline constexpr const char* kGruWr = "gru.w_r";
inline constexpr const char* kGruUr = "gru.u_r";
inline constexpr const char* kGruBr = "gru.b_r";
inline constexpr const char* kGruWn = "gru.w_n";
inline constexpr const char* kGruUn = "gru.u_n";
inline constexpr const char* kGruBn = "gru.b_n";
inline constexpr const char* kQueryWeight = "proj.query.weight";
inline constexpr const char* kQueryBias = "proj.query.bias";
inline constexpr const char* kVideoWeight = "proj.video.weight";
inline constexpr const char* kVideoBias = "proj.video.bias";
}  // namespace paths

/// GRU over the token rows (h_0 = 0), keeping every hidden state:
///   z = sigmoid(x W_z + h U_z + b_z)
///   r = sigmoid(x W_r + h U_r + b_r)
///   n = tanh(x W_n + (r * h) U_n + b_n)
///   h' = (1 - z) * n + z * h
/// Each state is then projected to D and L2-normalized.
QueryRepr gru_encode(Graph& graph, const Matrix& tokens, const ParamTree& params);

/// Mean of the frame rows inside each grid interval, scale-major.
Matrix pool_proposals(const Matrix& frames, const ProposalGrid& grid);

/// Projects pooled proposal rows to D and L2-normalizes them.
NodeId project_proposals(Graph& graph, const Matrix& pooled, const ParamTree& params);

/// pool_proposals followed by project_proposals.
NodeId featurize_proposals(Graph& graph, const Matrix& frames, const ProposalGrid& grid,
                           const ParamTree& params);

}  // namespace vlanet
