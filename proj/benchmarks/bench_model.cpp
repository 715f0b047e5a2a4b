#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "colorrec/model.hpp"
#include "colorrec/sequence.hpp"
#include "colorrec/vocabulary.hpp"

using namespace colorrec;

namespace {

// A batch of random sequences with one masked color each, over `colors` codes.
std::vector<EncodedExample> batch_of(std::size_t size, int colors, std::uint64_t seed) {
  std::vector<ColorCode> codes;
  for (int i = 0; i < colors; ++i) codes.push_back({static_cast<std::uint16_t>(i / 16), static_cast<std::uint16_t>(i % 16), 0});
  const Vocabulary vocab({}, codes);
  std::mt19937_64 gen(seed);
  std::vector<EncodedExample> out;
  for (std::size_t n = 0; n < size; ++n) {
    CodePalettes p;
    for (auto& group : p) {
      for (int s = 0; s < 5; ++s) group.push_back(codes[gen() % codes.size()]);
    }
    const ColorSequence seq = encode_code_palettes(p);
    const int at[] = {static_cast<int>(gen() % 3) * kPaletteStride};
    out.push_back(encode_example(mask_at(seq, at), vocab));
  }
  return out;
}

ModelConfig default_config(int colors) {
  ModelConfig cfg;
  cfg.vocab_size = colors;
  cfg.dropout = 0.0;
  return cfg;
}

}  // namespace

static void BM_Forward(benchmark::State& state) {
  const auto batch = batch_of(static_cast<std::size_t>(state.range(0)), 256, 1);
  const MaskedColorModel<float> model(default_config(256));
  for (auto _ : state) benchmark::DoNotOptimize(model.loss(batch).loss);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(32);

static void BM_ForwardBackward(benchmark::State& state) {
  const auto batch = batch_of(static_cast<std::size_t>(state.range(0)), 256, 2);
  const ModelConfig cfg = default_config(256);
  const MaskedColorModel<float> model(cfg);
  ModelParams<float> grads = ModelParams<float>::zeros(cfg);
  for (auto _ : state) {
    grads.set_zero();
    benchmark::DoNotOptimize(model.loss_and_gradients(batch, grads, nullptr).loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(32);
