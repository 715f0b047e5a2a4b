#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "colorrec/palette.hpp"

using namespace colorrec;

static void BM_KMeansWeighted(benchmark::State& state) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> l(0, 100), ab(-80, 80), w(0.1, 5.0);
  std::vector<WeightedLab> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {{l(gen), ab(gen), ab(gen)}, w(gen)};
  for (auto _ : state) benchmark::DoNotOptimize(kmeans_weighted(pts, kMaxPaletteColors, 7).inertia);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeansWeighted)->Arg(64)->Arg(1024)->Arg(16384);
