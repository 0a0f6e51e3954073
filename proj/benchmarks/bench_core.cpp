#include <benchmark/benchmark.h>

#include <vector>

#include "hoopnet/evalkit.hpp"
#include "hoopnet/mixhead.hpp"
#include "hoopnet/seqnet.hpp"

using namespace hoopnet;

namespace {

num::Matrix noise(num::SeededRng& rng, std::size_t rows, std::size_t cols) {
  num::Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

seq::ModelConfig config_for(const benchmark::State& state) {
  return {2, static_cast<std::size_t>(state.range(0)), 3, 12, 4};
}

std::vector<seq::TrainingSample> batch_of(num::SeededRng& rng, const seq::ModelConfig& cfg,
                                          std::size_t n) {
  std::vector<seq::TrainingSample> batch;
  for (std::size_t k = 0; k < n; ++k) {
    seq::TrainingSample s;
    s.inputs = noise(rng, cfg.seq_len, cfg.input_dim);
    s.targets = noise(rng, cfg.seq_len - 1, 3);
    s.label = static_cast<int>(k % 2);
    batch.push_back(std::move(s));
  }
  return batch;
}

void BM_StackForward(benchmark::State& state) {
  const auto cfg = config_for(state);
  num::SeededRng rng(1);
  const auto m = seq::ModelParams::init_uniform(cfg, rng);
  const auto xs = noise(rng, cfg.seq_len, cfg.input_dim);
  for (auto _ : state) benchmark::DoNotOptimize(seq::stack_forward(m, xs));
}
BENCHMARK(BM_StackForward)->Arg(16)->Arg(64);

void BM_Backward(benchmark::State& state, seq::NllMode mode) {
  const auto cfg = config_for(state);
  num::SeededRng rng(2);
  const auto m = seq::ModelParams::init_uniform(cfg, rng);
  const auto batch = batch_of(rng, cfg, 64);
  auto grads = seq::ModelParams::zeros(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(seq::backward(m, batch, {1.0, 1.0, mode}, grads));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK_CAPTURE(BM_Backward, full, seq::NllMode::kFullSequence)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Backward, prefix, seq::NllMode::kPrefix)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_DensityGrid(benchmark::State& state) {
  mdn::Mixture mix;
  mix.components.push_back({0.6, {0.0, 0.0, 0.0}, {1.0, 0.5, 0.8}, 0.4});
  mix.components.push_back({0.4, {1.0, -1.0, 0.5}, {0.3, 0.9, 0.4}, -0.2});
  const mdn::GridBounds bounds{-3.0, 3.0, -3.0, 3.0};
  const auto res = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mdn::density_grid(mix, mdn::Plane::kXY, bounds, res, res));
  }
}
BENCHMARK(BM_DensityGrid)->Arg(61)->Arg(201);

void BM_RocAuc(benchmark::State& state) {
  num::SeededRng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores(n);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = rng.normal();
    labels[i] = rng.uniform() < 0.35 ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::roc_auc(scores, labels));
}
BENCHMARK(BM_RocAuc)->Arg(1000)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
