#include "cli.hpp"

#include "vlanet/checkpoint.hpp"
#include "vlanet/error.hpp"
#include "vlanet/evaluation.hpp"
#include "vlanet/loss_check.hpp"
#include "vlanet/synthetic.hpp"
#include "vlanet/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

namespace vlanet::cli {

namespace fs = std::filesystem;

namespace {

// Names of the files each subcommand writes under --out.
constexpr const char* kConfigFile = "config.json";
constexpr const char* kCheckpointFile = "checkpoint.vlck";
constexpr const char* kHistoryFile = "history.csv";
constexpr const char* kMetricsFile = "metrics.csv";
constexpr const char* kPredictionsFile = "predictions.csv";
constexpr const char* kSelectionFile = "selection.csv";
constexpr const char* kAttentionFile = "attention.csv";

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  return f;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Flags that override the training config. Unset flags leave the lower
// layers (config file, manifest grid hint, built-in defaults) in place.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> margin;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> negatives;
  std::optional<std::string> optimizer;
  std::optional<std::int64_t> stride;
  std::vector<std::int64_t> windows;
  std::optional<std::size_t> cascade_iters;
  std::optional<std::size_t> dim;
  bool no_surrogate = false;
  bool share_cascade = false;
};

void add_grid_flags(CLI::App& app, Overrides& o) {
  app.add_option("--stride", o.stride, "Segment-group stride in frames");
  app.add_option("--windows", o.windows, "Window sizes, e.g. 176,208,240")->delimiter(',');
}

void add_model_flags(CLI::App& app, Overrides& o) {
  app.add_option("--cascade-iters", o.cascade_iters, "Cross-attention rounds");
  app.add_option("--dim", o.dim, "Model and attention dimension D = D_a");
  app.add_flag("--no-surrogate", o.no_surrogate, "Attend over all K*L proposals");
  app.add_flag("--share-cascade", o.share_cascade, "Reuse one stage pair for every round");
}

void apply(const Overrides& o, TrainingConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.margin) c.margin = *o.margin;
  if (o.lr) c.learning_rate = *o.lr;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.negatives) c.negatives = *o.negatives;
  if (o.optimizer) c.optimizer = parse_optimizer(*o.optimizer);
  if (o.stride) c.stride = *o.stride;
  if (!o.windows.empty()) c.windows = o.windows;
  if (o.cascade_iters) c.model.cca.cascade_iterations = *o.cascade_iters;
  if (o.dim) {
    c.model.model_dim = *o.dim;
    c.model.attention_dim = *o.dim;
  }
  if (o.no_surrogate) c.model.use_surrogate = false;
  if (o.share_cascade) c.model.cca.share_cascade_weights = true;
}

// -- gen-data ---------------------------------------------------------------

struct GenArgs {
  std::string out;
  SyntheticSpec spec;
  Overrides grid;  // recorded in the manifest as its grid hint
};

int gen_data(GenArgs a, std::ostream& out) {
  if (a.grid.stride) a.spec.grid.stride = *a.grid.stride;
  if (!a.grid.windows.empty()) a.spec.grid.windows = a.grid.windows;
  const SyntheticResult r = generate_synthetic(a.spec, a.out);
  out << "wrote " << r.manifest.videos.size() << " videos, " << r.manifest.pairs.size()
      << " pairs to " << a.out << "\n";
  out << "separation: " << r.separation_violations << " violations, min margin "
      << fmt(r.separation_margin) << "\n";
  return 0;
}

// -- train ------------------------------------------------------------------

struct TrainArgs {
  std::string manifest;
  std::string out;
  std::string config;
  Overrides overrides;
  bool quiet = false;
};

TrainingConfig effective_config(const Manifest& manifest, const std::string& config_path,
                                const Overrides& o) {
  TrainingConfig c;
  if (manifest.grid) {
    c.stride = manifest.grid->stride;
    c.windows = manifest.grid->windows;
  }
  if (!config_path.empty()) c = config_from_json(read_text(config_path), c);
  apply(o, c);
  c.validate();
  return c;
}

int train_cmd(const TrainArgs& a, std::ostream& out) {
  const Manifest manifest = load_manifest(a.manifest);
  const FeatureStore store = load_feature_store(manifest);
  TrainingConfig config = effective_config(manifest, a.config, a.overrides);
  adopt_feature_dims(config, store);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  open_out(dir / kConfigFile) << config_to_json(config) << "\n";

  const auto samples = training_samples(manifest);
  const auto t0 = std::chrono::steady_clock::now();
  const Checkpoint ckpt =
      train(store, samples, pairing_index(manifest), config, [&](const EpochStats& s) {
        if (a.quiet) return;
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        char line[160];
        std::snprintf(line, sizeof line, "epoch %zu  pos %.4f  neg %.4f  gap %.4f  loss %.4f  %.1fs\n",
                      s.epoch, s.mean_pos_sim, s.mean_neg_sim, s.mean_pos_sim - s.mean_neg_sim,
                      s.loss, secs);
        out << line << std::flush;
      });

  save_checkpoint(ckpt, dir / kCheckpointFile);
  auto history = open_out(dir / kHistoryFile);
  write_history_csv(history, ckpt.history);
  out << "checkpoint: " << (dir / kCheckpointFile).string() << "\n";
  return 0;
}

// -- eval / infer -----------------------------------------------------------

struct EvalArgs {
  std::string manifest;
  std::string checkpoint;
  std::string out;
  std::string split = "test";
  std::uint64_t seed = 0;
  Overrides overrides;  // grid flags only
};

TrainingConfig inference_config(const Checkpoint& ckpt, const Overrides& o) {
  TrainingConfig c = ckpt.config;
  if (o.stride) c.stride = *o.stride;
  if (!o.windows.empty()) c.windows = o.windows;
  c.validate();
  return c;
}

int eval_cmd(const EvalArgs& a, std::ostream& out) {
  const Manifest manifest = load_manifest(a.manifest);
  const FeatureStore store = load_feature_store(manifest);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const TrainingConfig config = inference_config(ckpt, a.overrides);

  const EvaluationResult r = evaluate(manifest, store, ckpt.params, config, a.split, a.seed);
  const fs::path dir(a.out);
  auto metrics = open_out(dir / kMetricsFile);
  write_metrics_csv(metrics, r.metrics);
  auto preds = open_out(dir / kPredictionsFile);
  write_predictions_csv(preds, r.samples, r.predictions);

  out << r.samples.size() << " samples (" << a.split << ")\n";
  for (const MetricRow& m : r.metrics) {
    out << m.metric;
    if (m.metric != "miou") out << " R@" << m.n;
    if (m.iou_threshold) out << " IoU=" << fmt(*m.iou_threshold);
    out << "  " << fmt(m.value) << "\n";
  }
  return 0;
}

struct InferArgs {
  EvalArgs eval;
  std::vector<std::string> samples;  // video:query
  std::size_t limit = 0;
};

int infer_cmd(const InferArgs& a, std::ostream& out) {
  const Manifest manifest = load_manifest(a.eval.manifest);
  const FeatureStore store = load_feature_store(manifest);
  const Checkpoint ckpt = load_checkpoint(a.eval.checkpoint);
  const TrainingConfig config = inference_config(ckpt, a.eval.overrides);

  std::vector<std::pair<std::string, std::string>> chosen;
  if (!a.samples.empty()) {
    for (const std::string& s : a.samples) {
      const auto colon = s.find(':');
      if (colon == std::string::npos) throw ConfigError("sample '" + s + "' is not video:query");
      chosen.emplace_back(s.substr(0, colon), s.substr(colon + 1));
    }
  } else {
    for (const PairEntry& p : manifest.pairs) {
      if (p.split == a.eval.split) chosen.emplace_back(p.video, p.query);
    }
  }
  if (a.limit > 0 && chosen.size() > a.limit) chosen.resize(a.limit);

  const fs::path dir(a.eval.out);
  auto preds = open_out(dir / kPredictionsFile);
  auto selection = open_out(dir / kSelectionFile);
  auto attention = open_out(dir / kAttentionFile);
  preds << "video_id,query_id,rank,start,end,score\n";
  selection << "video_id,query_id,group,scale,start,end,similarity,weight,vla_score\n";
  attention << "video_id,query_id,stage,index,weight\n";

  for (const auto& [video, query] : chosen) {
    const Inference inf =
        rank_proposals(store.video(video), store.query(query), ckpt.params, config, store.mode);
    std::size_t rank = 1;
    for (const ScoredInterval& s : inf.ranking.items) {
      preds << video << ',' << query << ',' << rank++ << ',' << s.interval.start << ','
            << s.interval.end << ',' << fmt(s.score) << '\n';
    }
    for (const CandidateRow& c : inf.candidates) {
      selection << video << ',' << query << ',' << c.group << ',' << c.scale << ','
                << c.interval.start << ',' << c.interval.end << ',' << fmt(c.similarity) << ','
                << fmt(c.weight) << ',' << fmt(c.vla_score) << '\n';
    }
    for (const StageDump& s : inf.stages) {
      for (std::size_t i = 0; i < s.weights.size(); ++i) {
        attention << video << ',' << query << ',' << s.stage << ',' << i << ','
                  << fmt(s.weights[i]) << '\n';
      }
    }
    const Interval& top = inf.ranking.items.front().interval;
    out << video << '/' << query << "  top " << top.str() << "  c=" << fmt(inf.similarity)
        << "\n";
  }
  return 0;
}

// -- gradcheck --------------------------------------------------------------

struct GradArgs {
  std::uint64_t seed = 0;
  double tol = 1e-4;
  LossCheckShape shape;
};

int gradcheck_cmd(const GradArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const LossCheckResult r = check_full_loss(a.shape, a.seed, a.tol);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out << "instance seed " << r.seed << " (" << r.redraws << " redraws), D=" << a.shape.dim
      << " K=" << a.shape.groups << " L=" << a.shape.scales << " M=" << a.shape.tokens
      << " cascade=" << a.shape.cascade_iterations << "\n";
  out << format_report(r.report);
  char line[64];
  std::snprintf(line, sizeof line, "%.2fs\n", secs);
  out << line;
  return r.report.pass ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Weakly supervised video moment retrieval"};
  app.name("vlanet");
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic planted-alignment dataset");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--seed", gen.spec.seed, "Generator seed");
  gen_cmd->add_option("--videos", gen.spec.videos, "Training videos");
  gen_cmd->add_option("--test-videos", gen.spec.test_videos, "Test videos");
  gen_cmd->add_option("--frames", gen.spec.frames, "Frames per video");
  gen_cmd->add_option("--noise", gen.spec.noise, "Frame and token noise sigma");
  add_grid_flags(*gen_cmd, gen.grid);

  TrainArgs tr;
  CLI::App* train_app = app.add_subcommand("train", "Train on the manifest's train split");
  train_app->add_option("--manifest", tr.manifest, "Dataset manifest")->required();
  train_app->add_option("--out", tr.out, "Run directory")->required();
  train_app->add_option("--config", tr.config, "Training config JSON");
  train_app->add_option("--seed", tr.overrides.seed, "Init and sampling seed");
  train_app->add_option("--epochs", tr.overrides.epochs, "Epochs");
  train_app->add_option("--margin", tr.overrides.margin, "Hinge margin");
  train_app->add_option("--lr", tr.overrides.lr, "Learning rate");
  train_app->add_option("--batch-size", tr.overrides.batch_size, "Pairs per optimizer step");
  train_app->add_option("--negatives", tr.overrides.negatives, "Negatives per positive");
  train_app->add_option("--optimizer", tr.overrides.optimizer, "adam | sgd");
  add_grid_flags(*train_app, tr.overrides);
  add_model_flags(*train_app, tr.overrides);
  train_app->add_flag("--quiet", tr.quiet, "No per-epoch lines");

  EvalArgs ev;
  CLI::App* eval_app = app.add_subcommand("eval", "Recall metrics on a split");
  InferArgs inf;
  CLI::App* infer_app = app.add_subcommand("infer", "Rankings and attention dumps per sample");
  for (auto [sub, a] : {std::pair{eval_app, &ev}, std::pair{infer_app, &inf.eval}}) {
    sub->add_option("--manifest", a->manifest, "Dataset manifest")->required();
    sub->add_option("--checkpoint", a->checkpoint, "Checkpoint file")->required();
    sub->add_option("--out", a->out, "Output directory")->required();
    sub->add_option("--split", a->split, "Split to score");
    add_grid_flags(*sub, a->overrides);
  }
  eval_app->add_option("--seed", ev.seed, "Random-baseline seed");
  infer_app->add_option("--sample", inf.samples, "video:query to score (repeatable)");
  infer_app->add_option("--limit", inf.limit, "Score at most this many pairs");

  GradArgs gc;
  CLI::App* grad_app = app.add_subcommand("gradcheck", "Finite-difference check of the full loss");
  grad_app->add_option("--seed", gc.seed, "First instance seed");
  grad_app->add_option("--tol", gc.tol, "Max relative error");
  grad_app->add_option("--cascade-iters", gc.shape.cascade_iterations, "Cross-attention rounds");
  grad_app->add_option("--dim", gc.shape.dim, "D = D_a");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen_cmd) return gen_data(gen, out);
    if (*train_app) return train_cmd(tr, out);
    if (*eval_app) return eval_cmd(ev, out);
    if (*infer_app) return infer_cmd(inf, out);
    if (*grad_app) return gradcheck_cmd(gc, out);
  } catch (const ConfigError& e) {
    err << "vlanet: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "vlanet: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace vlanet::cli
