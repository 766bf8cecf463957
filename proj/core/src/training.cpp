#include "vlanet/training.hpp"
#include "vlanet/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <memory>

namespace vlanet {

using nlohmann::json;

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(const std::string& text) {
  if (text == "adam") return OptimizerKind::kAdam;
  if (text == "sgd" || text == "gd") return OptimizerKind::kGradientDescent;
  throw ConfigError("unknown optimizer '" + text + "' (expected adam or sgd)");
}

void TrainingConfig::validate() const {
  if (!(margin > 0.0)) throw ConfigError("margin must be > 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and >= 0");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam epsilon must be > 0");
  if (batch_size < 2) throw ConfigError("batch size must be >= 2");
  if (negatives < 1) throw ConfigError("negatives per positive must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (windows.empty()) throw ConfigError("at least one window size is required");
  if (!std::is_sorted(windows.begin(), windows.end()) || windows.front() < 1) {
    throw ConfigError("window sizes must be positive and ascending");
  }
  if (model.cca.cascade_iterations > kMaxCascadeIterations) {
    throw ConfigError("cascade iterations must be in [0, " +
                      std::to_string(kMaxCascadeIterations) + "]");
  }
  if (model.model_dim == 0 || model.attention_dim == 0 || model.hidden_dim == 0) {
    throw ConfigError("model dimensions must be positive");
  }
}

std::string config_to_json(const TrainingConfig& c) {
  json j;
  j["margin"] = c.margin;
  j["learning_rate"] = c.learning_rate;
  j["adam_epsilon"] = c.adam_epsilon;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["negatives"] = c.negatives;
  j["seed"] = c.seed;
  j["optimizer"] = to_string(c.optimizer);
  j["stride"] = c.stride;
  j["windows"] = c.windows;
  j["model"] = {
      {"embed_dim", c.model.embed_dim},
      {"raw_dim", c.model.raw_dim},
      {"hidden_dim", c.model.hidden_dim},
      {"model_dim", c.model.model_dim},
      {"attention_dim", c.model.attention_dim},
      {"cascade_iterations", c.model.cca.cascade_iterations},
      {"share_cascade_weights", c.model.cca.share_cascade_weights},
      {"use_surrogate", c.model.use_surrogate},
  };
  return j.dump(2) + "\n";
}

TrainingConfig config_from_json(const std::string& text, TrainingConfig c) {
  try {
    const json j = json::parse(text);
    auto read = [&j](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    read("margin", c.margin);
    read("learning_rate", c.learning_rate);
    read("adam_epsilon", c.adam_epsilon);
    read("epochs", c.epochs);
    read("batch_size", c.batch_size);
    read("negatives", c.negatives);
    read("seed", c.seed);
    read("stride", c.stride);
    read("windows", c.windows);
    if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    if (j.contains("model")) {
      const json& m = j.at("model");
      auto read_model = [&m](const char* key, auto& field) {
        if (m.contains(key)) field = m.at(key).get<std::decay_t<decltype(field)>>();
      };
      read_model("embed_dim", c.model.embed_dim);
      read_model("raw_dim", c.model.raw_dim);
      read_model("hidden_dim", c.model.hidden_dim);
      read_model("model_dim", c.model.model_dim);
      read_model("attention_dim", c.model.attention_dim);
      read_model("cascade_iterations", c.model.cca.cascade_iterations);
      read_model("share_cascade_weights", c.model.cca.share_cascade_weights);
      read_model("use_surrogate", c.model.use_surrogate);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

std::vector<TrainSample> training_samples(const Manifest& manifest, const std::string& split) {
  std::vector<TrainSample> out;
  for (const PairEntry& p : manifest.pairs) {
    if (p.split == split) out.push_back({p.video, p.query});
  }
  return out;
}

PairingIndex pairing_index(const Manifest& manifest) {
  PairingIndex index;
  for (const PairEntry& p : manifest.pairs) index[p.video].insert(p.query);
  return index;
}

double contrastive_loss(double c_pos, double c_neg, double margin) {
  return std::max(0.0, margin - c_pos + c_neg);
}

std::vector<std::vector<std::string>> sample_negatives(std::span<const TrainSample> batch,
                                                       const PairingIndex& pairing,
                                                       std::mt19937_64& rng, std::size_t count) {
  if (batch.size() < 2) throw TrainingError("no negatives available: batch has one sample");
  std::vector<std::vector<std::string>> out(batch.size());
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    eligible.clear();
    const auto it = pairing.find(batch[i].video_id);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (j == i) continue;
      const std::string& q = batch[j].query_id;
      if (q == batch[i].query_id) continue;
      if (it != pairing.end() && it->second.contains(q)) continue;
      eligible.push_back(j);
    }
    if (eligible.empty()) {
      throw TrainingError("no negatives available for video '" + batch[i].video_id + "'");
    }
    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    for (std::size_t n = 0; n < count; ++n) out[i].push_back(batch[eligible[pick(rng)]].query_id);
  }
  return out;
}

ProposalGrid make_grid(const TrainingConfig& config, DatasetMode mode, std::int64_t length) {
  if (mode == DatasetMode::kSegmentUnits) {
    const auto moments = enumerate_contiguous_moments(length);
    return grid_from_moments(moments);
  }
  return generate_segment_groups(length, config.stride, config.windows);
}

namespace {

class GradientDescent final : public Optimizer {
 public:
  explicit GradientDescent(double lr) : lr_(lr) {}
  void step(ParamTree& params, const GradientMap& grads) override {
    for (const auto& [path, g] : grads) params.at(path) -= lr_ * g;
  }

 private:
  double lr_;
};

class Adam final : public Optimizer {
 public:
  Adam(double lr, double epsilon) : lr_(lr), epsilon_(epsilon) {}
  void step(ParamTree& params, const GradientMap& grads) override {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (const auto& [path, g] : grads) {
      auto [it, fresh] = moments_.try_emplace(path);
      if (fresh) {
        it->second.first = Matrix::Zero(g.rows(), g.cols());
        it->second.second = Matrix::Zero(g.rows(), g.cols());
      }
      Matrix& m = it->second.first;
      Matrix& v = it->second.second;
      m = kBeta1 * m + (1.0 - kBeta1) * g;
      v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseProduct(g);
      const auto update =
          (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon_);
      params.at(path).array() -= lr_ * update;
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  double lr_;
  double epsilon_;
  std::size_t t_ = 0;
  std::map<std::string, std::pair<Matrix, Matrix>> moments_;
};

void add_into(GradientMap& total, const GradientMap& grads) {
  for (const auto& [path, g] : grads) {
    if (total.contains(path)) {
      total.at(path) += g;
    } else {
      total.set(path, g);
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t begin = 0; begin < n; begin += size) {
    ranges.emplace_back(begin, std::min(n, begin + size));
  }
  // A trailing singleton has no in-batch negatives; fold it into the previous batch.
  if (ranges.size() > 1 && ranges.back().second - ranges.back().first == 1) {
    ranges[ranges.size() - 2].second = ranges.back().second;
    ranges.pop_back();
  }
  return ranges;
}

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, double learning_rate,
                                          double adam_epsilon) {
  if (kind == OptimizerKind::kAdam) return std::make_unique<Adam>(learning_rate, adam_epsilon);
  return std::make_unique<GradientDescent>(learning_rate);
}

PairLoss build_pair_loss(Graph& graph, const Matrix& pooled, const ProposalGrid& grid,
                         const Matrix& positive_tokens,
                         std::span<const Matrix* const> negative_tokens, const ParamTree& params,
                         const TrainingConfig& config) {
  if (negative_tokens.empty()) throw TrainingError("pair loss needs at least one negative");
  const NodeId features = project_proposals(graph, pooled, params);
  PairLoss out;
  out.c_pos = run_pipeline(graph, features, grid, positive_tokens, params, config.model)
                  .cca.similarity;
  // Average of max(0, margin - c_pos + c_neg) over the negatives.
  std::vector<NodeId> hinges;
  for (const Matrix* neg : negative_tokens) {
    const NodeId c_neg =
        run_pipeline(graph, features, grid, *neg, params, config.model).cca.similarity;
    out.c_neg.push_back(c_neg);
    hinges.push_back(graph.relu(graph.affine(graph.sub(c_neg, out.c_pos), 1.0, config.margin)));
  }
  const NodeId total = graph.sum_all(graph.concat_rows(hinges));
  out.loss = graph.affine(total, 1.0 / static_cast<double>(hinges.size()), 0.0);
  return out;
}

void adopt_feature_dims(TrainingConfig& config, const FeatureStore& store) {
  if (!store.frames.empty()) {
    config.model.raw_dim = static_cast<std::size_t>(store.frames.begin()->second.cols());
  }
  if (!store.tokens.empty()) {
    config.model.embed_dim = static_cast<std::size_t>(store.tokens.begin()->second.cols());
  }
}

Checkpoint train(const FeatureStore& store, std::span<const TrainSample> samples,
                 const PairingIndex& pairing, TrainingConfig config,
                 const EpochCallback& on_epoch) {
  config.validate();
  adopt_feature_dims(config, store);
  if (samples.size() < 2) throw TrainingError("training needs at least 2 pairs");

  struct VideoCache {
    Matrix pooled;
    ProposalGrid grid;
  };
  std::map<std::string, VideoCache> videos;
  for (const TrainSample& s : samples) {
    if (videos.contains(s.video_id)) continue;
    const Matrix& frames = store.video(s.video_id);
    VideoCache cache;
    cache.grid = make_grid(config, store.mode, frames.rows());
    cache.pooled = pool_proposals(frames, cache.grid);
    videos.emplace(s.video_id, std::move(cache));
  }

  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.params = init_params(config.model, config.seed);
  auto optimizer = make_optimizer(config.optimizer, config.learning_rate, config.adam_epsilon);
  // Shuffling and negative sampling draw from a stream separate from init.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<TrainSample> order(samples.begin(), samples.end());
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double pos_sum = 0.0;
    double neg_sum = 0.0;
    double loss_sum = 0.0;
    std::size_t neg_count = 0;

    for (const auto& [begin, end] : batch_ranges(order.size(), config.batch_size)) {
      const std::span<const TrainSample> batch(order.data() + begin, end - begin);
      const auto negatives = sample_negatives(batch, pairing, rng, config.negatives);
      GradientMap total;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const VideoCache& video = videos.at(batch[i].video_id);
        std::vector<const Matrix*> neg_tokens;
        for (const std::string& q : negatives[i]) neg_tokens.push_back(&store.query(q));

        Graph graph;
        const PairLoss pair = build_pair_loss(graph, video.pooled, video.grid,
                                              store.query(batch[i].query_id), neg_tokens,
                                              ckpt.params, config);
        const double loss = graph.scalar(pair.loss);
        if (!std::isfinite(loss)) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                              " for sample " + batch[i].video_id + "/" + batch[i].query_id);
        }
        loss_sum += loss;
        pos_sum += graph.scalar(pair.c_pos);
        for (NodeId c : pair.c_neg) neg_sum += graph.scalar(c);
        neg_count += pair.c_neg.size();
        add_into(total, graph.backward(pair.loss));
      }
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (auto& [path, g] : total) g *= inv;
      optimizer->step(ckpt.params, total);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_pos_sim = pos_sum / static_cast<double>(order.size());
    stats.mean_neg_sim = neg_sum / static_cast<double>(neg_count);
    stats.loss = loss_sum / static_cast<double>(order.size());
    ckpt.history.push_back(stats);
    ckpt.epoch = epoch;
    if (on_epoch) on_epoch(stats);
  }
  return ckpt;
}

}  // namespace vlanet
