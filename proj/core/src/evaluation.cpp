#include "vlanet/evaluation.hpp"
#include "vlanet/error.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>

namespace vlanet {

namespace {

void check_aligned(std::size_t predictions, std::size_t samples) {
  if (predictions != samples) {
    throw ConfigError("metrics: " + std::to_string(predictions) + " predictions for " +
                      std::to_string(samples) + " samples");
  }
}

const RankedPrediction& non_empty(const RankedPrediction& p, const EvalSample& s) {
  if (p.items.empty()) {
    throw ConfigError("empty prediction list for " + s.video_id + "/" + s.query_id);
  }
  return p;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::vector<EvalSample> eval_samples(const Manifest& manifest, const std::string& split) {
  std::vector<EvalSample> out;
  for (const PairEntry& p : manifest.pairs) {
    if (p.split != split) continue;
    if (!p.gt) throw DataError("pair " + p.video + "/" + p.query + " has no gt interval");
    out.push_back({p.video, p.query, *p.gt});
  }
  return out;
}

RankedPrediction rank_scored(std::vector<ScoredInterval> candidates) {
  std::map<Interval, double> best;
  for (const ScoredInterval& c : candidates) {
    auto [it, fresh] = best.try_emplace(c.interval, c.score);
    if (!fresh) it->second = std::max(it->second, c.score);
  }
  RankedPrediction out;
  for (const auto& [iv, score] : best) out.items.push_back({iv, score});
  std::stable_sort(out.items.begin(), out.items.end(),
                   [](const ScoredInterval& a, const ScoredInterval& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.interval < b.interval;
                   });
  return out;
}

Inference rank_proposals(const Matrix& frames, const Matrix& tokens, const ParamTree& params,
                         const TrainingConfig& config, DatasetMode mode) {
  const ProposalGrid grid = make_grid(config, mode, frames.rows());
  Graph graph;
  const NodeId features = featurize_proposals(graph, frames, grid, params);
  const PipelineOutput out = run_pipeline(graph, features, grid, tokens, params, config.model);

  Inference inf;
  inf.similarity = graph.scalar(out.cca.similarity);
  // Copies: scoring below appends nodes, which may move stored values.
  const Matrix weights = graph.value(out.cca.v_weights);
  const Matrix attended = graph.value(out.cca.attended_v);
  std::vector<ScoredInterval> scored;
  for (std::size_t k = 0; k < out.candidates.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    CandidateRow c;
    c.group = out.candidates.group[k];
    c.scale = out.candidates.chosen_scale[k];
    c.interval = out.candidates.chosen_interval[k];
    c.similarity = out.candidates.similarity[k];
    c.weight = weights.data()[k];
    const NodeId single = graph.constant(attended.row(row));
    c.vla_score = graph.scalar(vla_score(graph, single, out.cca.attended_q, params, "final"));
    inf.candidates.push_back(c);
    scored.push_back({c.interval, c.weight});
  }
  inf.ranking = rank_scored(std::move(scored));
  for (const StageWeights& s : out.cca.stages) {
    const Matrix& w = graph.value(s.weights);
    inf.stages.push_back({s.stage, std::vector<double>(w.data(), w.data() + w.size())});
  }
  return inf;
}

double recall_at_n_iou(std::span<const RankedPrediction> predictions,
                       std::span<const EvalSample> samples, std::size_t n, double m) {
  if (n < 1) throw ConfigError("recall: n must be >= 1");
  if (!(m > 0.0 && m <= 1.0)) throw ConfigError("recall: IoU threshold must be in (0, 1]");
  check_aligned(predictions.size(), samples.size());
  if (samples.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& items = non_empty(predictions[i], samples[i]).items;
    const std::size_t top = std::min(n, items.size());
    for (std::size_t r = 0; r < top; ++r) {
      if (temporal_iou(items[r].interval, samples[i].gt) >= m) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

DidemoMetrics didemo_metrics(std::span<const RankedPrediction> predictions,
                             std::span<const EvalSample> samples, std::size_t n) {
  if (n < 1) throw ConfigError("recall: n must be >= 1");
  check_aligned(predictions.size(), samples.size());
  DidemoMetrics out;
  if (samples.empty()) return out;
  std::size_t hits = 0;
  double iou_sum = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& items = non_empty(predictions[i], samples[i]).items;
    const std::size_t top = std::min(n, items.size());
    for (std::size_t r = 0; r < top; ++r) {
      if (items[r].interval == samples[i].gt) {
        ++hits;
        break;
      }
    }
    iou_sum += temporal_iou(items.front().interval, samples[i].gt);
  }
  out.recall = static_cast<double>(hits) / static_cast<double>(samples.size());
  out.miou = iou_sum / static_cast<double>(samples.size());
  return out;
}

double random_baseline(std::span<const EvalSample> samples, std::span<const ProposalGrid> grids,
                       std::size_t n, double m, std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("random baseline needs at least one trial");
  check_aligned(grids.size(), samples.size());
  if (samples.empty()) return 0.0;
  std::mt19937_64 rng(seed);
  std::size_t hits = 0;
  std::vector<Interval> pool;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::vector<Interval> distinct = grids[i].distinct_intervals();
    const std::size_t take = std::min(n, distinct.size());
    for (std::size_t t = 0; t < trials; ++t) {
      pool = distinct;
      // Partial Fisher-Yates: the first `take` entries are a uniform draw.
      for (std::size_t r = 0; r < take; ++r) {
        std::uniform_int_distribution<std::size_t> pick(r, pool.size() - 1);
        std::swap(pool[r], pool[pick(rng)]);
        if (temporal_iou(pool[r], samples[i].gt) >= m) {
          ++hits;
          break;
        }
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size() * trials);
}

EvaluationResult evaluate(const Manifest& manifest, const FeatureStore& store,
                          const ParamTree& params, const TrainingConfig& config,
                          const std::string& split, std::uint64_t seed) {
  check_compatible(params, config.model);
  EvaluationResult result;
  result.samples = eval_samples(manifest, split);
  std::vector<ProposalGrid> grids;
  for (const EvalSample& s : result.samples) {
    const Matrix& frames = store.video(s.video_id);
    result.predictions.push_back(
        rank_proposals(frames, store.query(s.query_id), params, config, store.mode).ranking);
    grids.push_back(make_grid(config, store.mode, frames.rows()));
  }

  auto& rows = result.metrics;
  if (store.mode == DatasetMode::kFrameGrid) {
    for (std::size_t n : {1, 5}) {
      for (double m : {0.3, 0.5, 0.7}) {
        rows.push_back({"recall", n, m, recall_at_n_iou(result.predictions, result.samples, n, m)});
      }
    }
    for (std::size_t n : {1, 5}) {
      for (double m : {0.3, 0.5, 0.7}) {
        rows.push_back({"random_recall", n, m,
                        random_baseline(result.samples, grids, n, m, kRandomBaselineTrials, seed)});
      }
    }
  } else {
    for (std::size_t n : {1, 5}) {
      rows.push_back({"recall", n, std::nullopt,
                      didemo_metrics(result.predictions, result.samples, n).recall});
    }
    rows.push_back({"miou", 1, std::nullopt, didemo_metrics(result.predictions, result.samples, 1).miou});
  }
  return result;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricRow> rows) {
  out << "metric,n,iou_threshold,value\n";
  for (const MetricRow& r : rows) {
    out << r.metric << ',' << r.n << ',' << (r.iou_threshold ? format_double(*r.iou_threshold) : "")
        << ',' << format_double(r.value) << '\n';
  }
}

void write_predictions_csv(std::ostream& out, std::span<const EvalSample> samples,
                           std::span<const RankedPrediction> predictions) {
  check_aligned(predictions.size(), samples.size());
  out << "video_id,query_id,rank,start,end,score\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::size_t rank = 1;
    for (const ScoredInterval& s : predictions[i].items) {
      out << samples[i].video_id << ',' << samples[i].query_id << ',' << rank++ << ','
          << s.interval.start << ',' << s.interval.end << ',' << format_double(s.score) << '\n';
    }
  }
}

}  // namespace vlanet
