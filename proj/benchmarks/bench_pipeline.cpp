#include "vlanet/attention.hpp"
#include "vlanet/encoders.hpp"
#include "vlanet/model.hpp"
#include "vlanet/training.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace vlanet;

namespace {

Matrix gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

TrainingConfig bench_config(std::size_t dim) {
  TrainingConfig c;
  c.stride = 8;
  c.windows = {32, 64, 128};
  c.model.raw_dim = c.model.embed_dim = 32;
  c.model.hidden_dim = c.model.model_dim = c.model.attention_dim = dim;
  return c;
}

void BM_DenseAttention(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::Index d = 64;
  ParamTree p;
  p.set(stage_w1("s"), gaussian(d, d, 1));
  p.set(stage_w2("s"), gaussian(d, d, 2));
  const Matrix x = gaussian(n, d, 3), y = gaussian(8, d, 4);
  for (auto _ : state) {
    Graph g;
    const DenseAttention a = dense_attention(g, g.constant(x), g.constant(y), p, "s");
    benchmark::DoNotOptimize(g.value(a.output).data());
  }
}
BENCHMARK(BM_DenseAttention)->Arg(9)->Arg(27)->Arg(81);

void BM_PairLoss(benchmark::State& state) {
  TrainingConfig c = bench_config(static_cast<std::size_t>(state.range(0)));
  const ParamTree params = init_params(c.model, 0);
  const Matrix frames = gaussian(240, 32, 5);
  const ProposalGrid grid = make_grid(c, DatasetMode::kFrameGrid, 240);
  const Matrix pooled = pool_proposals(frames, grid);
  const Matrix pos = gaussian(6, 32, 6), neg = gaussian(6, 32, 7);
  const Matrix* negs[] = {&neg};
  const bool backward = state.range(1) != 0;
  for (auto _ : state) {
    Graph g;
    const PairLoss pl = build_pair_loss(g, pooled, grid, pos, negs, params, c);
    if (backward) {
      benchmark::DoNotOptimize(g.backward(pl.loss).size());
    } else {
      benchmark::DoNotOptimize(g.scalar(pl.loss));
    }
  }
}
BENCHMARK(BM_PairLoss)->ArgNames({"D", "backward"})->Args({16, 0})->Args({16, 1})->Args({64, 0})->Args({64, 1});

}  // namespace

BENCHMARK_MAIN();
