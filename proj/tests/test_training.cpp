#include "vlanet/checkpoint.hpp"
#include "vlanet/encoders.hpp"
#include "vlanet/error.hpp"
#include "vlanet/synthetic.hpp"
#include "vlanet/training.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace vlanet;

namespace {

struct TinyRun {
  Manifest manifest;
  FeatureStore store;
};

TinyRun tiny_dataset(const testing::TempDir& dir, std::uint64_t seed = 0) {
  generate_synthetic(testing::tiny_spec(seed), dir.path());
  TinyRun r;
  r.manifest = load_manifest(dir / "manifest.json");
  r.store = load_feature_store(r.manifest);
  return r;
}

Checkpoint train_tiny(const TinyRun& run, const TrainingConfig& config) {
  return train(run.store, training_samples(run.manifest), pairing_index(run.manifest), config);
}

}  // namespace

TEST_SUITE("training") {

TEST_CASE("contrastive hinge") {
  CHECK(contrastive_loss(0.9, 0.15, 0.5) == 0.0);
  CHECK(contrastive_loss(0.3, 0.3, 0.5) == 0.5);
  CHECK(contrastive_loss(0.2, 0.6, 0.5) == doctest::Approx(0.9));
  for (double pos = -1.0; pos <= 1.0; pos += 0.25) {
    for (double neg = -1.0; neg <= 1.0; neg += 0.25) {
      const double l = contrastive_loss(pos, neg, 0.5);
      CHECK(l >= 0.0);
      CHECK((l == 0.0) == (pos >= neg + 0.5));
    }
  }
}

TEST_CASE("negatives: only choice, exclusions, errors") {
  std::mt19937_64 rng(1);
  PairingIndex pairing{{"v1", {"q1"}}, {"v2", {"q2"}}};
  const std::vector<TrainSample> two{{"v1", "q1"}, {"v2", "q2"}};
  const auto negs = sample_negatives(two, pairing, rng);
  CHECK(negs[0] == std::vector<std::string>{"q2"});
  CHECK(negs[1] == std::vector<std::string>{"q1"});

  const std::vector<TrainSample> one{{"v1", "q1"}};
  try {
    sample_negatives(one, pairing, rng);
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("no negatives available") != std::string::npos);
  }

  // q3 also describes v1, so it may never be v1's negative.
  PairingIndex shared{{"v1", {"q1", "q3"}}, {"v2", {"q2"}}, {"v3", {"q3"}}};
  const std::vector<TrainSample> batch{{"v1", "q1"}, {"v2", "q2"}, {"v3", "q3"}};
  for (int i = 0; i < 200; ++i) {
    CHECK(sample_negatives(batch, shared, rng)[0][0] == "q2");
  }
}

TEST_CASE("negatives are deterministic in the seed") {
  PairingIndex pairing;
  std::vector<TrainSample> batch;
  for (int i = 0; i < 6; ++i) {
    const std::string v = "v" + std::to_string(i), q = "q" + std::to_string(i);
    batch.push_back({v, q});
    pairing[v].insert(q);
  }
  std::mt19937_64 a(77), b(77);
  CHECK(sample_negatives(batch, pairing, a, 3) == sample_negatives(batch, pairing, b, 3));
}

TEST_CASE("negatives are uniform over the eligible queries") {
  // 10k draws for one positive in a 5-sample batch: 4 eligible negatives,
  // each expected 2500 times with sd sqrt(10000 * 1/4 * 3/4).
  PairingIndex pairing;
  std::vector<TrainSample> batch;
  for (int i = 0; i < 5; ++i) {
    const std::string v = "v" + std::to_string(i), q = "q" + std::to_string(i);
    batch.push_back({v, q});
    pairing[v].insert(q);
  }
  std::mt19937_64 rng(2024);
  std::map<std::string, int> counts;
  for (int i = 0; i < 10000; ++i) ++counts[sample_negatives(batch, pairing, rng)[0][0]];
  CHECK(counts.size() == 4);
  CHECK(!counts.contains("q0"));
  const double sd = std::sqrt(10000.0 * 0.25 * 0.75);
  for (const auto& [q, n] : counts) CHECK(std::abs(n - 2500.0) <= 3.0 * sd);
}

TEST_CASE("config JSON round trip and layering") {
  TrainingConfig c;
  c.margin = 0.25;
  c.learning_rate = 2e-3;
  c.epochs = 7;
  c.seed = 99;
  c.optimizer = OptimizerKind::kGradientDescent;
  c.windows = {16, 32};
  c.model.cca.cascade_iterations = 3;
  c.model.use_surrogate = false;
  CHECK(config_from_json(config_to_json(c)) == c);

  const TrainingConfig partial = config_from_json(R"({"epochs": 3, "model": {"model_dim": 16}})", c);
  CHECK(partial.epochs == 3);
  CHECK(partial.model.model_dim == 16);
  CHECK(partial.margin == 0.25);

  CHECK_THROWS_AS(config_from_json("{not json"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"optimizer": "rmsprop"})"), ConfigError);
}

TEST_CASE("config validation") {
  TrainingConfig c;
  CHECK_NOTHROW(c.validate());
  c.margin = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.batch_size = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.windows = {64, 32};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.model.cca.cascade_iterations = kMaxCascadeIterations + 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("training samples carry no boundaries") {
  testing::TempDir dir("samples");
  const TinyRun run = tiny_dataset(dir);
  const auto samples = training_samples(run.manifest);
  CHECK(samples.size() == 8);
  CHECK(training_samples(run.manifest, "test").size() == 4);
  // TrainSample is exactly two ids.
  static_assert(sizeof(TrainSample) == 2 * sizeof(std::string));
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  testing::TempDir dir("zero_lr");
  const TinyRun run = tiny_dataset(dir);
  TrainingConfig c = testing::tiny_config();
  c.learning_rate = 0.0;
  c.epochs = 3;
  const Checkpoint ckpt = train_tiny(run, c);
  TrainingConfig adopted = c;
  adopt_feature_dims(adopted, run.store);
  CHECK(ckpt.params == init_params(adopted.model, c.seed));
  CHECK(ckpt.history.size() == 3);
  CHECK(ckpt.epoch == 3);
}

TEST_CASE("training is bit-reproducible") {
  testing::TempDir dir("repro");
  const TinyRun run = tiny_dataset(dir);
  const TrainingConfig c = testing::tiny_config();
  const std::string a = serialize_checkpoint(train_tiny(run, c));
  const std::string b = serialize_checkpoint(train_tiny(run, c));
  CHECK(a == b);
  TrainingConfig other = c;
  other.seed = 1;
  CHECK(serialize_checkpoint(train_tiny(run, other)) != a);
}

TEST_CASE("corrupting gt intervals does not change training") {
  testing::TempDir dir("firewall");
  TinyRun run = tiny_dataset(dir);
  const TrainingConfig c = testing::tiny_config();
  const std::string clean = serialize_checkpoint(train_tiny(run, c));
  for (PairEntry& p : run.manifest.pairs) p.gt = Interval{0, 1};
  CHECK(serialize_checkpoint(train_tiny(run, c)) == clean);
  for (PairEntry& p : run.manifest.pairs) p.gt.reset();
  CHECK(serialize_checkpoint(train_tiny(run, c)) == clean);
}

TEST_CASE("one small step lowers a single pair's loss") {
  testing::TempDir dir("descent");
  const TinyRun run = tiny_dataset(dir);
  TrainingConfig c = testing::tiny_config();
  adopt_feature_dims(c, run.store);
  ParamTree params = init_params(c.model, 3);
  // Scale up so the similarity is not vanishingly small at the start.
  for (const std::string& path : params.paths()) params.set(path, params.at(path) * 3.0);

  const Matrix& frames = run.store.video("v0000");
  const ProposalGrid grid = make_grid(c, run.store.mode, frames.rows());
  const Matrix pooled = pool_proposals(frames, grid);
  const Matrix* negs[] = {&run.store.query("q0001")};
  auto loss_of = [&](const ParamTree& p, GradientMap* grads) {
    Graph g;
    const PairLoss pl = build_pair_loss(g, pooled, grid, run.store.query("q0000"), negs, p, c);
    if (grads) *grads = g.backward(pl.loss);
    return g.scalar(pl.loss);
  };
  GradientMap grads;
  const double before = loss_of(params, &grads);
  REQUIRE(before > 0.0);
  auto opt = make_optimizer(OptimizerKind::kGradientDescent, 1e-3);
  opt->step(params, grads);
  CHECK(loss_of(params, nullptr) < before);
}

TEST_CASE("non-finite input is reported with the sample") {
  testing::TempDir dir("nan");
  TinyRun run = tiny_dataset(dir);
  run.store.tokens.at("q0003")(0, 0) = std::nan("");
  try {
    train_tiny(run, testing::tiny_config());
    FAIL("expected TrainingError");
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("non-finite loss") != std::string::npos);
    CHECK(msg.find("q0003") != std::string::npos);
  }
}

}  // TEST_SUITE

TEST_SUITE("checkpoint") {

TEST_CASE("save/load is bit-exact") {
  testing::TempDir dir("ckpt");
  const TinyRun run = tiny_dataset(dir);
  const Checkpoint ckpt = train_tiny(run, testing::tiny_config());
  save_checkpoint(ckpt, dir / "a.vlck");
  const Checkpoint back = load_checkpoint(dir / "a.vlck");
  CHECK(back.params == ckpt.params);
  CHECK(back.config == ckpt.config);
  CHECK(back.history == ckpt.history);
  CHECK(back.epoch == ckpt.epoch);
  CHECK(serialize_checkpoint(back) == testing::slurp(dir / "a.vlck"));
}

TEST_CASE("damaged checkpoints are rejected") {
  testing::TempDir dir("ckpt_bad");
  const TinyRun run = tiny_dataset(dir);
  const std::string bytes = serialize_checkpoint(train_tiny(run, testing::tiny_config()));

  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_checkpoint(magic), FormatError);

  std::string version = bytes;
  version[4] = 9;
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(version), doctest::Contains("version"), FormatError);

  CHECK_THROWS_WITH_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)),
                       doctest::Contains("truncated"), FormatError);
  CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.vlck"), FormatError);
}

TEST_CASE("a different declared D is rejected with a shape diagnostic") {
  testing::TempDir dir("ckpt_dim");
  const TinyRun run = tiny_dataset(dir);
  Checkpoint ckpt = train_tiny(run, testing::tiny_config());
  ckpt.config.model.model_dim = 12;
  try {
    deserialize_checkpoint(serialize_checkpoint(ckpt));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("expected") != std::string::npos);
  }
}

TEST_CASE("history CSV") {
  std::ostringstream out;
  write_history_csv(out, {{1, 0.5, 0.25, 0.75}, {2, 0.125, -0.5, 0.0}});
  CHECK(out.str() == "epoch,mean_pos_sim,mean_neg_sim,loss\n1,0.5,0.25,0.75\n2,0.125,-0.5,0\n");
}

}  // TEST_SUITE
