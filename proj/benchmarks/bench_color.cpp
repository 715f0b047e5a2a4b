#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "colorrec/color.hpp"

using namespace colorrec;

namespace {

std::vector<LabColor> random_labs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> l(0, 100), ab(-100, 100);
  std::vector<LabColor> out(n);
  for (auto& c : out) c = {l(gen), ab(gen), ab(gen)};
  return out;
}

}  // namespace

static void BM_Ciede2000(benchmark::State& state) {
  const auto labs = random_labs(1024, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ciede2000(labs[i & 1023], labs[(i + 1) & 1023]));
    ++i;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Ciede2000);

static void BM_SrgbToLab(benchmark::State& state) {
  std::uint32_t v = 0;
  for (auto _ : state) {
    const RgbColor c{static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v >> 16)};
    benchmark::DoNotOptimize(srgb_to_lab(c));
    v += 2654435761u;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SrgbToLab);

static void BM_Quantize(benchmark::State& state) {
  const auto labs = random_labs(1024, 2);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(quantize(labs[i++ & 1023]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Quantize);
