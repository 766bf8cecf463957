#pragma once

#include "vlanet/autodiff.hpp"

#include <string>
#include <vector>

namespace vlanet {

struct CcaOptions {
  std::size_t cascade_iterations = 2;
  /// All cascade rounds reuse one Q2V and one V2Q stage.
  bool share_cascade_weights = false;
};

inline constexpr std::size_t kMaxCascadeIterations = 8;

/// Parameter prefix of a stage; its weights live at "<prefix>.w1" / ".w2"
/// with shape D_a x D.
std::string stage_prefix(const std::string& stage);
std::string stage_w1(const std::string& stage);
std::string stage_w2(const std::string& stage);

/// Stage names in application order: "v2v", "q2q", then per round
/// "cascadeN.q2v" (V <- A(V,Q)) and "cascadeN.v2q" (Q <- A(Q,V)), then
/// "final". With shared weights the rounds are named "cascade.q2v/v2q".
std::vector<std::string> cca_stage_names(const CcaOptions& options);
/// Distinct stages owning weights (shared rounds collapse to one pair).
std::vector<std::string> cca_parameter_stages(const CcaOptions& options);

/// E(x, Y) = sum_m tanh((W_1 x) . (W_2 y_m)). x is 1 x D, Y is M x D.
NodeId vla_score(Graph& graph, NodeId x, NodeId ys, const ParamTree& params,
                 const std::string& stage);

struct DenseAttention {
  NodeId output;   // N x D
  NodeId weights;  // N x 1 softmax weights
  NodeId scores;   // N x 1 VLA scores
};

/// A(X, Y): row n of X scaled by softmax_n(E(x_1, Y), ..., E(x_N, Y)).
DenseAttention dense_attention(Graph& graph, NodeId xs, NodeId ys, const ParamTree& params,
                               const std::string& stage);

struct StageWeights {
  std::string stage;
  NodeId weights;
};

struct CcaOutput {
  NodeId v_comp;      // 1 x D, column sum of attended_v
  NodeId attended_v;  // K x D
  NodeId attended_q;  // M x D
  NodeId v_weights;   // K x 1, softmax of the last V-updating stage
  NodeId v_scores;    // K x 1, VLA scores behind v_weights
  NodeId similarity;  // 1 x 1, c = E(v_comp, Q)
  std::vector<StageWeights> stages;
};

/// V <- A(V,V); Q <- A(Q,Q); then per round V <- A(V,Q); Q <- A(Q,V);
/// finally c = E(sum of V rows, Q).
CcaOutput cascaded_attention(Graph& graph, NodeId video, NodeId query, const ParamTree& params,
                             const CcaOptions& options);

}  // namespace vlanet
