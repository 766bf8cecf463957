#pragma once

#include "vlanet/data_io.hpp"
#include "vlanet/model.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace vlanet {

enum class OptimizerKind { kGradientDescent, kAdam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& text);

struct TrainingConfig {
  double margin = 0.5;
  double learning_rate = 1e-3;
  double adam_epsilon = 1e-16;  // cascade gradients start far below 1e-8
  std::size_t epochs = 200;
  std::size_t batch_size = 8;
  std::size_t negatives = 1;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::int64_t stride = 8;
  std::vector<std::int64_t> windows{176, 208, 240};
  ModelConfig model;

  /// Throws ConfigError on any out-of-range field.
  void validate() const;
  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

std::string config_to_json(const TrainingConfig& config);
/// Fields absent from the JSON keep the values already in base.
TrainingConfig config_from_json(const std::string& text, TrainingConfig base = {});

/// A weakly labelled positive pair. There is deliberately no temporal
/// boundary here: training never sees one.
struct TrainSample {
  std::string video_id;
  std::string query_id;
};

std::vector<TrainSample> training_samples(const Manifest& manifest,
                                          const std::string& split = "train");

/// Queries paired with each video anywhere in the manifest.
using PairingIndex = std::map<std::string, std::set<std::string>>;
PairingIndex pairing_index(const Manifest& manifest);

/// max(0, margin - c_pos + c_neg)
double contrastive_loss(double c_pos, double c_neg, double margin);

/// For each sample, `count` negative query ids drawn uniformly (with
/// replacement) from the other samples' queries, skipping queries paired
/// with the sample's own video.
std::vector<std::vector<std::string>> sample_negatives(std::span<const TrainSample> batch,
                                                       const PairingIndex& pairing,
                                                       std::mt19937_64& rng,
                                                       std::size_t count = 1);

/// Proposal grid for one video under a config and dataset mode.
ProposalGrid make_grid(const TrainingConfig& config, DatasetMode mode, std::int64_t length);

struct EpochStats {
  std::size_t epoch = 0;
  double mean_pos_sim = 0.0;
  double mean_neg_sim = 0.0;
  double loss = 0.0;
  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct Checkpoint {
  ParamTree params;
  TrainingConfig config;
  std::size_t epoch = 0;
  std::vector<EpochStats> history;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(ParamTree& params, const GradientMap& grads) = 0;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate,
                                          double adam_epsilon = 1e-8);

/// Loss of one positive pair against its negatives, built into `graph`.
struct PairLoss {
  NodeId loss;
  NodeId c_pos;
  std::vector<NodeId> c_neg;
};

PairLoss build_pair_loss(Graph& graph, const Matrix& pooled, const ProposalGrid& grid,
                         const Matrix& positive_tokens,
                         std::span<const Matrix* const> negative_tokens, const ParamTree& params,
                         const TrainingConfig& config);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Contrastive training. Parameters start from init_params(config.model,
/// config.seed); model raw/embed dims are taken from the feature store.
Checkpoint train(const FeatureStore& store, std::span<const TrainSample> samples,
                 const PairingIndex& pairing, TrainingConfig config,
                 const EpochCallback& on_epoch = {});

/// Overwrites raw_dim/embed_dim from the feature store.
void adopt_feature_dims(TrainingConfig& config, const FeatureStore& store);

}  // namespace vlanet
