#pragma once

#include "vlanet/data_io.hpp"
#include "vlanet/training.hpp"

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace vlanet {

/// A test pair with its annotated moment. Only evaluation code builds these.
struct EvalSample {
  std::string video_id;
  std::string query_id;
  Interval gt;
};

/// Pairs of a split; every pair must carry a gt interval.
std::vector<EvalSample> eval_samples(const Manifest& manifest, const std::string& split = "test");

struct ScoredInterval {
  Interval interval;
  double score = 0.0;
};

/// Descending by score, then earlier start, then earlier end; intervals unique.
struct RankedPrediction {
  std::vector<ScoredInterval> items;
};

/// Deduplicates (keeping the max score) and orders candidates.
RankedPrediction rank_scored(std::vector<ScoredInterval> candidates);

struct CandidateRow {
  std::size_t group = 0;
  std::size_t scale = 0;
  Interval interval;
  double similarity = 0.0;  // proposal . w_M
  double weight = 0.0;      // final V-updating softmax weight
  double vla_score = 0.0;   // E(attended row, final Q) under the final stage
};

struct StageDump {
  std::string stage;
  std::vector<double> weights;
};

struct Inference {
  RankedPrediction ranking;
  std::vector<CandidateRow> candidates;
  std::vector<StageDump> stages;
  double similarity = 0.0;
};

/// Full pipeline for one pair; candidates are scored by their final-stage
/// attention weight.
Inference rank_proposals(const Matrix& frames, const Matrix& tokens, const ParamTree& params,
                         const TrainingConfig& config, DatasetMode mode);

/// Fraction of samples whose top-n holds an interval with IoU >= m.
double recall_at_n_iou(std::span<const RankedPrediction> predictions,
                       std::span<const EvalSample> samples, std::size_t n, double m);

struct DidemoMetrics {
  double recall = 0.0;  // gt exactly among the top-n
  double miou = 0.0;    // mean IoU of top-1 with gt
};

DidemoMetrics didemo_metrics(std::span<const RankedPrediction> predictions,
                             std::span<const EvalSample> samples, std::size_t n);

/// Monte-Carlo R@n,IoU=m when the top-n are drawn uniformly without
/// replacement from each sample's distinct grid intervals.
double random_baseline(std::span<const EvalSample> samples, std::span<const ProposalGrid> grids,
                       std::size_t n, double m, std::size_t trials, std::uint64_t seed);

struct MetricRow {
  std::string metric;
  std::size_t n = 0;
  std::optional<double> iou_threshold;
  double value = 0.0;
};

struct EvaluationResult {
  std::vector<EvalSample> samples;
  std::vector<RankedPrediction> predictions;
  std::vector<MetricRow> metrics;
};

inline constexpr std::size_t kRandomBaselineTrials = 200;

/// Ranks every sample and computes the metric grid: R@{1,5} x
/// IoU{0.3,0.5,0.7} plus the random baseline for frame grids, R@{1,5} and
/// mIoU for segment units.
EvaluationResult evaluate(const Manifest& manifest, const FeatureStore& store,
                          const ParamTree& params, const TrainingConfig& config,
                          const std::string& split = "test", std::uint64_t seed = 0);

/// `metric,n,iou_threshold,value`
void write_metrics_csv(std::ostream& out, std::span<const MetricRow> rows);
/// `video_id,query_id,rank,start,end,score`
void write_predictions_csv(std::ostream& out, std::span<const EvalSample> samples,
                           std::span<const RankedPrediction> predictions);

}  // namespace vlanet
