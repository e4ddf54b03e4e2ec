#include <random>

#include <benchmark/benchmark.h>

#include "tsgatr/alignment.hpp"
#include "tsgatr/datagen.hpp"
#include "tsgatr/evaluator.hpp"
#include "tsgatr/pipeline.hpp"

namespace {

using namespace tsgatr;

Matrix random_sequence(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> n(0, 1);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

void BM_DtwDistance(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Index l = state.range(0);
  const Matrix x = random_sequence(rng, l, 64), y = random_sequence(rng, l, 64);
  for (auto _ : state) benchmark::DoNotOptimize(dtw_distance(x, y).normalized);
  state.SetComplexityN(l);
}
BENCHMARK(BM_DtwDistance)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_DtwGrad(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Matrix x = random_sequence(rng, state.range(0), 64), y = random_sequence(rng, state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(dtw_grad(x, y).dx.data());
}
BENCHMARK(BM_DtwGrad)->Arg(64)->Arg(128);

void BM_ComputeEer(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> g(static_cast<std::size_t>(state.range(0))), imp(g.size());
  for (auto& s : g) s = u(rng);
  for (auto& s : imp) s = u(rng) + 0.2;
  for (auto _ : state) benchmark::DoNotOptimize(compute_eer(g, imp).eer);
}
BENCHMARK(BM_ComputeEer)->Arg(1000)->Arg(10000);

void BM_EmbedSignature(benchmark::State& state) {
  const auto user = generate_user(make_user_spec(4, 1));
  RunConfig config;
  config.network.d = static_cast<int>(state.range(0));
  config.network.variant = static_cast<Variant>(state.range(1));
  const auto params = init_parameters(config.network, 5);
  for (auto _ : state) benchmark::DoNotOptimize(embed_signature(params, config, user.genuine[0]).data());
  state.SetLabel(to_string(config.network.variant) + ", " + std::to_string(user.genuine[0].size()) + " points");
}
BENCHMARK(BM_EmbedSignature)
    ->Args({32, static_cast<int>(Variant::kFull)})
    ->Args({64, static_cast<int>(Variant::kFull)})
    ->Args({32, static_cast<int>(Variant::kGruOnly)})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
