#include <benchmark/benchmark.h>

#include "bgae/evaluation.hpp"
#include "bgae/experiment.hpp"
#include "bgae/synthetic.hpp"

namespace bgae {
namespace {

// Training epochs at Cora scale; d and the variant vary.
void BM_TrainEpochs(benchmark::State& state) {
  static const DatasetBundle bundle = make_sbm_bundle(cora_scale_sbm(0));
  ExperimentConfig config;
  config.dataset = "cora_scale_sbm";
  config.out = "unused";
  config.dim = state.range(0);
  config.variant = state.range(1) ? Variant::Bvgae : Variant::Bgae;
  config.train.max_epochs = 5;
  config.train.patience = 5;
  const auto data = prepare(config, bundle);
  for (auto _ : state) benchmark::DoNotOptimize(run_training(config, data).state.best_epoch);
  state.counters["epochs"] = 5;
}
BENCHMARK(BM_TrainEpochs)->Args({64, 0})->Args({512, 0})->Args({512, 1})->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Matrix x(2708, state.range(0));
  for (Index i = 0; i < x.size(); ++i) x(i) = g(rng);
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(x, 7).inertia);
}
BENCHMARK(BM_KMeans)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace bgae
