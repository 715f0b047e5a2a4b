#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "colorrec/predictor.hpp"
#include "colorrec/sequence.hpp"
#include "colorrec/vocabulary.hpp"

namespace colorrec {

struct SkipGramOptions {
  int dim = 32;
  int epochs = 10;
  int negatives = 5;
  double learning_rate = 0.025;  // decays linearly to 1e-4 of itself
  double unigram_power = 0.75;
  std::uint64_t seed = 0;
};

// Skip-gram with negative sampling over the color tokens of each sequence
// (every other color in the sequence is context; no segments or order).
// A masked slot is filled by ranking candidates by cosine similarity to the
// mean input vector of the visible colors; scores are a softmax over those
// cosines.
class SkipGramBaseline final : public MaskedPredictor {
 public:
  SkipGramBaseline(std::span<const ColorSequence> corpus, Vocabulary vocab,
                   const SkipGramOptions& opts = {});

  const Vocabulary& vocab() const override { return vocab_; }
  const std::vector<float>& embeddings() const { return in_; }
  int dim() const { return dim_; }

  std::vector<double> scores(const ColorSequence& seq, std::span<const int> masked) const;

  std::vector<std::vector<ScoredCode>> predict_topn(const ColorSequence& seq,
                                                    std::span<const int> positions, std::size_t n,
                                                    const std::vector<bool>& excluded = {}) const override;

 private:
  Vocabulary vocab_;
  int dim_;
  std::vector<float> in_, out_;  // num_colors x dim, row-major
};

}  // namespace colorrec
