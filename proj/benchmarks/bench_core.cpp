#include <benchmark/benchmark.h>

#include <random>

#include "dgfl/confidence.hpp"
#include "dgfl/protocol.hpp"
#include "dgfl/training.hpp"

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

// 300 graphs of 15 nodes, roughly the size of a small TUDataset benchmark.
const dgfl::GraphDataset& bench_data() {
  static const dgfl::GraphDataset data = [] {
    dgfl::SyntheticSpec spec;
    spec.families = {{150, 15, 2.0}, {150, 15, 4.0}};
    return dgfl::gen_synthetic(spec, 1);
  }();
  return data;
}

void BM_DtwBanded(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = noise(n, 1), b = noise(n, 2);
  const dgfl::DtwOptions opts{std::max<std::size_t>(1, n / 10), 1};
  for (auto _ : state) benchmark::DoNotOptimize(dgfl::dtw(a, b, opts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DtwBanded)->RangeMultiplier(2)->Range(256, 2048)->Complexity();

// Confidence between two gradients of the default 3-layer, width-64 model.
void BM_Confidence(benchmark::State& state) {
  const dgfl::GinDims dims{19, 64, 3, 2};
  dgfl::GradientVector a, b;
  a.values = noise(dims.parameter_count(), 3);
  b.values = noise(dims.parameter_count(), 4);
  const auto opts = dgfl::resolve_dtw_options(a.values.size(), dgfl::ConfidenceSettings{});
  for (auto _ : state) benchmark::DoNotOptimize(dgfl::confidence(a, b, opts));
}
BENCHMARK(BM_Confidence)->Unit(benchmark::kMillisecond);

void BM_LossAndGrad(benchmark::State& state) {
  const dgfl::GraphDataset& data = bench_data();
  const auto model = dgfl::GinModel::initialize(dgfl::GinDims{data.feature_dim, 64, 3, 2}, 1);
  const std::span<const dgfl::Graph> batch(data.graphs.data(), static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dgfl::loss_and_grad(model, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGrad)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_LocalTrainOneEpoch(benchmark::State& state) {
  const dgfl::GraphDataset& data = bench_data();
  const auto model = dgfl::GinModel::initialize(dgfl::GinDims{data.feature_dim, 64, 3, 2}, 1);
  std::vector<std::size_t> shard(40);
  for (std::size_t k = 0; k < shard.size(); ++k) shard[k] = k;
  dgfl::TrainOptions opts;
  opts.epochs = 1;
  for (auto _ : state) {
    state.PauseTiming();
    auto client = dgfl::init_clients({shard}, model, dgfl::AdamHyper{}, false).front();
    dgfl::Rng rng(7);
    state.ResumeTiming();
    benchmark::DoNotOptimize(dgfl::local_train(client, data.graphs, opts, rng));
  }
}
BENCHMARK(BM_LocalTrainOneEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
