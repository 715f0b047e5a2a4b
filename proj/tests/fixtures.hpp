#pragma once

#include <random>
#include <vector>

#include "colorrec/model.hpp"
#include "colorrec/sequence.hpp"
#include "colorrec/vocabulary.hpp"

namespace fixture {

// Codes 0_0_0 .. (n-1)_0_0 spread along the lightness axis.
inline colorrec::Vocabulary line_vocab(int n) {
  std::vector<colorrec::ColorCode> codes;
  for (int i = 0; i < n; ++i) codes.push_back({static_cast<std::uint16_t>(i), 0, 0});
  return colorrec::Vocabulary({}, codes);
}

inline colorrec::ColorSequence random_sequence(std::mt19937_64& gen, const colorrec::Vocabulary& vocab) {
  std::uniform_int_distribution<std::size_t> pick(0, vocab.num_colors() - 1);
  std::uniform_int_distribution<int> count(1, 5);
  colorrec::CodePalettes p;
  for (auto& group : p) {
    const int n = count(gen);
    for (int i = 0; i < n; ++i) group.push_back(vocab.code_at(pick(gen)));
  }
  return colorrec::encode_code_palettes(p);
}

inline std::vector<colorrec::EncodedExample> random_examples(std::uint64_t seed, const colorrec::Vocabulary& vocab,
                                                             std::size_t count) {
  std::mt19937_64 gen(seed);
  std::vector<colorrec::EncodedExample> out;
  for (std::size_t i = 0; i < count; ++i) {
    const auto seq = random_sequence(gen, vocab);
    const auto cp = seq.color_positions();
    const int a = cp[gen() % cp.size()];
    const std::vector<int> at{a};
    out.push_back(colorrec::encode_example(colorrec::mask_at(seq, at), vocab));
  }
  return out;
}

}  // namespace fixture
