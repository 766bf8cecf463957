#include "vlanet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace vlanet {

namespace {

struct Evaluation {
  double loss = 0.0;
  std::vector<Eigen::Index> route;
};

Evaluation evaluate(const LossBuilder& build, const ParamTree& params) {
  Graph g;
  NodeId loss = build(g, params);
  return {g.scalar(loss), g.routing_signature()};
}

}  // namespace

GradCheckReport finite_diff_check(const LossBuilder& build, const ParamTree& params,
                                  double tolerance, double step) {
  Graph base;
  NodeId loss = build(base, params);
  const GradientMap analytic = base.backward(loss);
  const auto base_route = base.routing_signature();

  GradCheckReport report;
  report.tolerance = tolerance;
  ParamTree probe = params;
  for (const auto& [path, grad] : analytic) {
    LeafCheck leaf;
    leaf.path = path;
    Matrix& value = probe.at(path);
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const double saved = value.data()[i];
      value.data()[i] = saved + step;
      const Evaluation plus = evaluate(build, probe);
      value.data()[i] = saved - step;
      const Evaluation minus = evaluate(build, probe);
      value.data()[i] = saved;
      ++leaf.components;

      if (plus.route != base_route || minus.route != base_route) {
        ++leaf.tie_adjacent;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * step);
      const double a = grad.data()[i];
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      leaf.max_rel_error = std::max(leaf.max_rel_error, std::abs(a - numeric) / denom);
    }
    leaf.pass = leaf.max_rel_error <= tolerance;
    report.max_rel_error = std::max(report.max_rel_error, leaf.max_rel_error);
    report.tie_adjacent += leaf.tie_adjacent;
    report.pass = report.pass && leaf.pass;
    report.leaves.push_back(std::move(leaf));
  }
  return report;
}

std::string format_report(const GradCheckReport& report) {
  std::ostringstream out;
  char line[256];
  for (const LeafCheck& leaf : report.leaves) {
    std::snprintf(line, sizeof line, "%-28s n=%-5zu max_rel_err=%.3e tie_adjacent=%zu %s\n",
                  leaf.path.c_str(), leaf.components, leaf.max_rel_error, leaf.tie_adjacent,
                  leaf.pass ? "PASS" : "FAIL");
    out << line;
  }
  std::snprintf(line, sizeof line, "overall max_rel_err=%.3e tol=%.1e tie_adjacent=%zu %s\n",
                report.max_rel_error, report.tolerance, report.tie_adjacent,
                report.pass ? "PASS" : "FAIL");
  out << line;
  return out.str();
}

}  // namespace vlanet
