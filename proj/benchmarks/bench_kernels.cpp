#include <benchmark/benchmark.h>

#include <random>

#include "bgae/diffusion.hpp"
#include "bgae/losses.hpp"
#include "bgae/synthetic.hpp"
#include "bgae/tensor.hpp"

namespace bgae {
namespace {

Matrix gaussian(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m(i) = g(rng);
  return m;
}

const DatasetBundle& cora_like() {
  static const DatasetBundle bundle = make_sbm_bundle(cora_scale_sbm(0));
  return bundle;
}

// Adjacency view times a dense N x d block.
void BM_SparseMatmul(benchmark::State& state) {
  const auto& b = cora_like();
  const auto view = std::make_shared<const SparseMatrix>(normalize_adjacency(b, true).matrix);
  const Matrix x = gaussian(b.num_nodes(), state.range(0), 1);
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(sparse_matmul(view, tape.constant(x)).value().data());
  }
}
BENCHMARK(BM_SparseMatmul)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_CovarianceLossBackward(benchmark::State& state) {
  const Index n = 2708;
  const Index d = state.range(0);
  const Matrix zl = gaussian(n, d, 2);
  const Matrix zd = gaussian(n, d, 3);
  for (auto _ : state) {
    Tape tape;
    const Tensor a = tape.variable(zl);
    const Tensor b = tape.variable(zd);
    const Tensor loss = covariance_loss(covariance_entries(a, b), 5e-3, n).total;
    tape.backward(loss);
    benchmark::DoNotOptimize(a.grad().data());
  }
}
BENCHMARK(BM_CovarianceLossBackward)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_PprExact(benchmark::State& state) {
  SbmConfig cfg;
  cfg.num_nodes = state.range(0);
  cfg.num_val = 0;
  cfg.num_test = 0;
  cfg.train_per_class = 1;
  const auto b = make_sbm_bundle(cfg);
  const auto t = normalize_adjacency(b, false);
  for (auto _ : state) benchmark::DoNotOptimize(ppr_exact(t, 0.15).matrix.nonZeros());
}
BENCHMARK(BM_PprExact)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_PprSeries(benchmark::State& state) {
  const auto& b = cora_like();
  const auto t = normalize_adjacency(b, false);
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ppr_truncated(t, 0.15, order).matrix.nonZeros());
}
BENCHMARK(BM_PprSeries)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_DiffuseTopK(benchmark::State& state) {
  const auto& b = cora_like();
  DiffusionConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(diffuse(b.num_nodes(), b.edges(), cfg).matrix.nonZeros());
}
BENCHMARK(BM_DiffuseTopK)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace bgae
