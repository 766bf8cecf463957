// Acceptance run: one PASS/FAIL line per criterion. Trains full models on
// the default synthetic dataset, so expect tens of minutes on one core.

#include "vlanet/attention.hpp"
#include "vlanet/checkpoint.hpp"
#include "vlanet/evaluation.hpp"
#include "vlanet/loss_check.hpp"
#include "vlanet/model.hpp"
#include "vlanet/surrogate.hpp"
#include "vlanet/synthetic.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

using namespace vlanet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double max_abs_diff(const Matrix& a, const oracle::Mat& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::abs(a(i, j) - b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
    }
  }
  return worst;
}

// ---- gradient ------------------------------------------------------------

void gradient_correctness() {
  const auto t0 = Clock::now();
  const LossCheckResult r = check_full_loss(LossCheckShape{}, 0, 1e-4);
  const double secs = seconds_since(t0);
  report("gradient-correctness", r.report.pass && r.report.max_rel_error <= 1e-4 && secs < 30.0,
         fmt("max_rel_error=%.3g (<=1e-4) seed=%llu redraws=%zu time=%.1fs (<30s)",
             r.report.max_rel_error, static_cast<unsigned long long>(r.seed), r.redraws, secs));
}

// ---- oracles --------------------------------------------------------------

void oracle_equivalence() {
  std::mt19937_64 rng(2718);
  std::uniform_int_distribution<std::size_t> size(1, 7);

  double dense_worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = size(rng), m = size(rng), d = size(rng), da = size(rng);
    const oracle::Mat x = oracle::random_mat(n, d, rng), y = oracle::random_mat(m, d, rng);
    const oracle::Mat w1 = oracle::random_mat(da, d, rng), w2 = oracle::random_mat(da, d, rng);
    ParamTree p;
    p.set(stage_w1("s"), oracle::to_eigen(w1));
    p.set(stage_w2("s"), oracle::to_eigen(w2));
    Graph g;
    const DenseAttention a =
        dense_attention(g, g.constant(oracle::to_eigen(x)), g.constant(oracle::to_eigen(y)), p, "s");
    const oracle::Attention ref = oracle::dense_attention(x, y, w1, w2);
    dense_worst = std::max(dense_worst, max_abs_diff(g.value(a.output), ref.output));
    for (std::size_t i = 0; i < n; ++i) {
      dense_worst = std::max(dense_worst, std::abs(g.value(a.weights)(static_cast<Eigen::Index>(i), 0) - ref.weights[i]));
    }
  }

  double cascade_worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ModelConfig c;
    c.embed_dim = c.raw_dim = c.hidden_dim = c.model_dim = c.attention_dim = size(rng) + 1;
    c.cca.cascade_iterations = trial % 4;
    c.cca.share_cascade_weights = trial % 5 == 4;
    ParamTree params;
    for (const auto& [path, value] : init_params(c, 500 + static_cast<std::uint64_t>(trial))) {
      params.set(path, value * 2.0);
    }
    const std::size_t k = size(rng), m = size(rng);
    const oracle::Mat v = oracle::random_mat(k, c.model_dim, rng), q = oracle::random_mat(m, c.model_dim, rng);
    Graph g;
    const CcaOutput out = cascaded_attention(g, g.constant(oracle::to_eigen(v)), g.constant(oracle::to_eigen(q)),
                                             params, c.cca);
    const oracle::Cascade ref = oracle::cascade(v, q, params, c.cca.cascade_iterations, c.cca.share_cascade_weights);
    cascade_worst = std::max(cascade_worst, std::abs(g.scalar(out.similarity) - ref.c));
    cascade_worst = std::max(cascade_worst, max_abs_diff(g.value(out.v_comp), {ref.v_comp}));
    cascade_worst = std::max(cascade_worst, max_abs_diff(g.value(out.attended_v), ref.v));
    cascade_worst = std::max(cascade_worst, max_abs_diff(g.value(out.attended_q), ref.q));
    for (std::size_t i = 0; i < k; ++i) {
      cascade_worst = std::max(cascade_worst, std::abs(g.value(out.v_weights)(static_cast<Eigen::Index>(i), 0) - ref.v_weights[i]));
    }
  }

  std::size_t select_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = size(rng), l = size(rng), d = 6;
    std::vector<std::int64_t> windows;
    for (std::size_t i = 0; i < l; ++i) windows.push_back(static_cast<std::int64_t>(2 + i));
    ProposalGrid grid = generate_segment_groups(windows.back() + static_cast<std::int64_t>(k), 1, windows);
    grid.groups.resize(k);
    const oracle::Mat feats = oracle::random_mat(k * l, d, rng);
    const oracle::Vec w = oracle::random_mat(1, d, rng)[0];
    Graph g;
    const SurrogateSet s = select_surrogates(g, g.constant(oracle::to_eigen(feats)), grid,
                                             g.constant(oracle::to_eigen({w})));
    if (s.chosen_scale != oracle::select(feats, k, l, w)) ++select_mismatch;
  }

  std::size_t recall_mismatch = 0, didemo_mismatch = 0;
  std::uniform_int_distribution<std::int64_t> pos(0, 24);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  auto interval = [&] {
    std::int64_t a = pos(rng), b = pos(rng);
    while (a == b) b = pos(rng);
    return Interval{std::min(a, b), std::max(a, b)};
  };
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RankedPrediction> preds;
    std::vector<EvalSample> samples;
    std::vector<std::vector<Interval>> lists;
    std::vector<Interval> gts;
    const std::size_t count = size(rng);
    for (std::size_t i = 0; i < count; ++i) {
      std::vector<ScoredInterval> cands;
      const std::size_t c = size(rng);
      for (std::size_t j = 0; j < c; ++j) cands.push_back({interval(), unit(rng)});
      preds.push_back(rank_scored(cands));
      lists.emplace_back();
      for (const ScoredInterval& s : preds.back().items) lists.back().push_back(s.interval);
      const Interval gt = trial % 2 ? interval() : cands[c - 1].interval;
      samples.push_back({"v", "q", gt});
      gts.push_back(gt);
    }
    const std::size_t n = size(rng);
    const double m = unit(rng);
    if (recall_at_n_iou(preds, samples, n, m) != oracle::recall(lists, gts, n, m)) ++recall_mismatch;
    const DidemoMetrics d = didemo_metrics(preds, samples, n);
    if (d.recall != oracle::exact_recall(lists, gts, n) || d.miou != oracle::mean_iou(lists, gts)) {
      ++didemo_mismatch;
    }
  }

  const bool pass = dense_worst <= 1e-10 && cascade_worst <= 1e-10 && select_mismatch == 0 &&
                    recall_mismatch == 0 && didemo_mismatch == 0;
  report("oracle-equivalence", pass,
         fmt("100 instances each: dense max_err=%.2g cascade max_err=%.2g (<=1e-10); "
             "mismatches select=%zu recall=%zu didemo=%zu (exact)",
             dense_worst, cascade_worst, select_mismatch, recall_mismatch, didemo_mismatch));
}

// ---- grid -----------------------------------------------------------------

void grid_arithmetic() {
  const std::vector<std::int64_t> windows{176, 208, 240};
  const ProposalGrid grid = generate_segment_groups(240, 8, windows);
  const std::size_t moments = enumerate_contiguous_moments(6).size();
  report("grid-arithmetic", grid.group_count() == 9 && grid.scales == 3 && moments == 21,
         fmt("groups=%zu scales=%zu (9x3), contiguous moments of 6 units=%zu (21)", grid.group_count(),
             grid.scales, moments));
}

// ---- training -------------------------------------------------------------

struct Dataset {
  Manifest manifest;
  FeatureStore store;
};

TrainingConfig base_config(const Manifest& manifest) {
  TrainingConfig c;
  if (manifest.grid) {
    c.stride = manifest.grid->stride;
    c.windows = manifest.grid->windows;
  }
  return c;
}

Checkpoint train_on(const Dataset& data, const Manifest& manifest, const TrainingConfig& c) {
  return train(data.store, training_samples(manifest), pairing_index(manifest), c);
}

struct RunResult {
  Checkpoint checkpoint;
  double seconds = 0.0;
  double r1_iou05 = 0.0;
  double random_r1_iou05 = 0.0;
};

double metric(const EvaluationResult& e, const std::string& name) {
  for (const MetricRow& r : e.metrics) {
    if (r.metric == name && r.n == 1 && r.iou_threshold && std::abs(*r.iou_threshold - 0.5) < 1e-12) return r.value;
  }
  throw std::runtime_error("missing metric " + name);
}

class Runs {
 public:
  explicit Runs(const Dataset& data) : data_(data) {}

  const RunResult& get(std::uint64_t seed, bool surrogate) {
    const auto key = std::make_pair(seed, surrogate);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    TrainingConfig c = base_config(data_.manifest);
    c.seed = seed;
    c.model.use_surrogate = surrogate;
    RunResult r;
    const auto t0 = Clock::now();
    r.checkpoint = train_on(data_, data_.manifest, c);
    r.seconds = seconds_since(t0);
    const EvaluationResult e = evaluate(data_.manifest, data_.store, r.checkpoint.params, r.checkpoint.config);
    r.r1_iou05 = metric(e, "recall");
    r.random_r1_iou05 = metric(e, "random_recall");
    std::printf("  [run seed=%llu surrogate=%d] %.0fs, R@1 IoU=0.5 %.3f (random %.3f)\n",
                static_cast<unsigned long long>(seed), surrogate ? 1 : 0, r.seconds, r.r1_iou05,
                r.random_r1_iou05);
    std::fflush(stdout);
    return cache_.emplace(key, std::move(r)).first->second;
  }

 private:
  const Dataset& data_;
  std::map<std::pair<std::uint64_t, bool>, RunResult> cache_;
};

void similarity_gap(Runs& runs) {
  const RunResult& r = runs.get(0, true);
  const auto& h = r.checkpoint.history;
  const double first = h.front().mean_pos_sim - h.front().mean_neg_sim;
  const double last = h.back().mean_pos_sim - h.back().mean_neg_sim;
  report("similarity-gap", last >= 0.4 && last > first && h.size() <= 200 && r.seconds < 600.0,
         fmt("final gap=%.4f (>=0.4) epoch-1 gap=%.3g epochs=%zu (<=200) train time=%.0fs (<600s)", last, first,
             h.size(), r.seconds));
}

void localization(Runs& runs) {
  std::vector<double> r1, rnd;
  for (std::uint64_t seed : {0, 1, 2}) {
    r1.push_back(runs.get(seed, true).r1_iou05);
    rnd.push_back(runs.get(seed, true).random_r1_iou05);
  }
  const double m = median(r1), base = median(rnd);
  report("localization", m >= 0.6 && m >= 3.0 * base,
         fmt("median R@1 IoU=0.5 over seeds 0-2 = %.3f [%.3f %.3f %.3f] (>=0.6, >=3x random %.3f = %.3f)", m,
             r1[0], r1[1], r1[2], base, 3.0 * base));
}

void ablation(Runs& runs) {
  std::vector<double> full, without;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    full.push_back(runs.get(seed, true).r1_iou05);
    without.push_back(runs.get(seed, false).r1_iou05);
  }
  const double mf = median(full), mw = median(without);
  report("surrogate-ablation", mw <= mf,
         fmt("median R@1 IoU=0.5 over seeds 0-4: w/o surrogate %.3f <= full %.3f", mw, mf));
}

TrainingConfig short_config(const Manifest& manifest) {
  TrainingConfig c = base_config(manifest);
  c.epochs = 3;
  return c;
}

void firewall(const Dataset& data) {
  const TrainingConfig c = short_config(data.manifest);
  const std::string clean = serialize_checkpoint(train_on(data, data.manifest, c));
  Manifest corrupted = data.manifest;
  std::mt19937_64 rng(99);
  std::size_t changed = 0;
  for (PairEntry& p : corrupted.pairs) {
    if (!p.gt) continue;
    const std::int64_t len = corrupted.video(p.video).length;
    std::uniform_int_distribution<std::int64_t> start(0, len - 2);
    const std::int64_t s = start(rng);
    p.gt = Interval{s, std::min(len, s + 1 + s % 7)};
    ++changed;
  }
  const std::string dirty = serialize_checkpoint(train_on(data, corrupted, c));
  report("weak-supervision-firewall", clean == dirty && changed > 0,
         fmt("%zu gt intervals rewritten; checkpoints %s (%zu bytes)", changed,
             clean == dirty ? "bit-identical" : "DIFFER", clean.size()));
}

void determinism(const Dataset& data) {
  auto once = [&] {
    const Checkpoint ck = train_on(data, data.manifest, short_config(data.manifest));
    const EvaluationResult e = evaluate(data.manifest, data.store, ck.params, ck.config);
    std::ostringstream metrics;
    write_metrics_csv(metrics, e.metrics);
    return std::make_pair(serialize_checkpoint(ck), metrics.str());
  };
  const auto a = once();
  const auto b = once();
  report("determinism", a == b,
         fmt("checkpoints %s, metrics CSVs %s", a.first == b.first ? "bit-identical" : "DIFFER",
             a.second == b.second ? "bit-identical" : "DIFFER"));
}

}  // namespace

int main() {
  try {
    grid_arithmetic();
    gradient_correctness();
    oracle_equivalence();

    testing::TempDir dir("acceptance");
    const SyntheticSpec spec;  // 200 videos, sigma 0.1, seed 0
    const SyntheticResult gen = generate_synthetic(spec, dir.path());
    std::printf("  [data] %zu pairs, separation violations %zu\n", gen.manifest.pairs.size(),
                gen.separation_violations);
    Dataset data;
    data.manifest = load_manifest(dir / "manifest.json");
    data.store = load_feature_store(data.manifest);

    firewall(data);
    determinism(data);

    Runs runs(data);
    similarity_gap(runs);
    localization(runs);
    ablation(runs);
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
