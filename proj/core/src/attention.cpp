#include "vlanet/attention.hpp"
#include "vlanet/error.hpp"

namespace vlanet {

namespace {

std::string round_prefix(const CcaOptions& options, std::size_t round) {
  return options.share_cascade_weights ? "cascade" : "cascade" + std::to_string(round);
}

NodeId alignment_matrix(Graph& graph, NodeId xs, NodeId ys, const ParamTree& params,
                        const std::string& stage) {
  const Matrix& x = graph.value(xs);
  const Matrix& y = graph.value(ys);
  if (x.cols() != y.cols()) {
    throw ShapeError("dense_attention[" + stage + "]: shape mismatch " + shape_of(x).str() +
                     " vs " + shape_of(y).str());
  }
  const NodeId px = graph.matmul_bt(xs, graph.parameter(params, stage_w1(stage)));
  const NodeId py = graph.matmul_bt(ys, graph.parameter(params, stage_w2(stage)));
  return graph.tanh(graph.matmul_bt(px, py));
}

}  // namespace

std::string stage_prefix(const std::string& stage) { return "cca." + stage; }
std::string stage_w1(const std::string& stage) { return stage_prefix(stage) + ".w1"; }
std::string stage_w2(const std::string& stage) { return stage_prefix(stage) + ".w2"; }

std::vector<std::string> cca_stage_names(const CcaOptions& options) {
  std::vector<std::string> names{"v2v", "q2q"};
  for (std::size_t i = 0; i < options.cascade_iterations; ++i) {
    const std::string prefix = round_prefix(options, i);
    names.push_back(prefix + ".q2v");
    names.push_back(prefix + ".v2q");
  }
  names.emplace_back("final");
  return names;
}

std::vector<std::string> cca_parameter_stages(const CcaOptions& options) {
  std::vector<std::string> names{"v2v", "q2q"};
  const std::size_t rounds =
      options.share_cascade_weights ? std::min<std::size_t>(options.cascade_iterations, 1)
                                    : options.cascade_iterations;
  for (std::size_t i = 0; i < rounds; ++i) {
    const std::string prefix = round_prefix(options, i);
    names.push_back(prefix + ".q2v");
    names.push_back(prefix + ".v2q");
  }
  names.emplace_back("final");
  return names;
}

NodeId vla_score(Graph& graph, NodeId x, NodeId ys, const ParamTree& params,
                 const std::string& stage) {
  if (graph.value(x).rows() != 1) {
    throw ShapeError("vla_score[" + stage + "]: x must be a row vector, got " +
                     shape_of(graph.value(x)).str());
  }
  return graph.sum_all(alignment_matrix(graph, x, ys, params, stage));
}

DenseAttention dense_attention(Graph& graph, NodeId xs, NodeId ys, const ParamTree& params,
                               const std::string& stage) {
  if (graph.value(xs).rows() < 1) throw ShapeError("dense_attention[" + stage + "]: empty X");
  DenseAttention out;
  out.scores = graph.row_sum(alignment_matrix(graph, xs, ys, params, stage));
  out.weights = graph.softmax(out.scores);
  out.output = graph.scale_rows(xs, out.weights);
  return out;
}

CcaOutput cascaded_attention(Graph& graph, NodeId video, NodeId query, const ParamTree& params,
                             const CcaOptions& options) {
  if (options.cascade_iterations > kMaxCascadeIterations) {
    throw ConfigError("cascade_iterations must be <= " + std::to_string(kMaxCascadeIterations));
  }
  CcaOutput out;

  DenseAttention v = dense_attention(graph, video, video, params, "v2v");
  out.stages.push_back({"v2v", v.weights});
  DenseAttention q = dense_attention(graph, query, query, params, "q2q");
  out.stages.push_back({"q2q", q.weights});
  NodeId vs = v.output;
  NodeId qs = q.output;
  out.v_weights = v.weights;
  out.v_scores = v.scores;

  for (std::size_t i = 0; i < options.cascade_iterations; ++i) {
    const std::string prefix = round_prefix(options, i);
    const DenseAttention cross_v = dense_attention(graph, vs, qs, params, prefix + ".q2v");
    vs = cross_v.output;
    out.v_weights = cross_v.weights;
    out.v_scores = cross_v.scores;
    out.stages.push_back({prefix + ".q2v", cross_v.weights});

    const DenseAttention cross_q = dense_attention(graph, qs, vs, params, prefix + ".v2q");
    qs = cross_q.output;
    out.stages.push_back({prefix + ".v2q", cross_q.weights});
  }

  out.attended_v = vs;
  out.attended_q = qs;
  out.v_comp = graph.column_sum(vs);
  out.similarity = vla_score(graph, out.v_comp, qs, params, "final");
  return out;
}

}  // namespace vlanet
