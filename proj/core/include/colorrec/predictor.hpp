#pragma once

#include <span>
#include <vector>

#include "colorrec/sequence.hpp"
#include "colorrec/vocabulary.hpp"

namespace colorrec {

struct ScoredCode {
  ColorCode code;
  std::size_t index = 0;  // candidate index in the vocabulary
  double probability = 0.0;
};

// Anything that can fill masked color slots. Implemented by the trained
// masked color model and by the skip-gram baseline.
class MaskedPredictor {
 public:
  virtual ~MaskedPredictor() = default;
  virtual const Vocabulary& vocab() const = 0;

  // Top-n per position by descending score, ties by ascending candidate
  // index. Tokens at `positions` are treated as masked. `excluded`, when
  // non-empty, is indexed by candidate and drops those codes.
  virtual std::vector<std::vector<ScoredCode>> predict_topn(
      const ColorSequence& seq, std::span<const int> positions, std::size_t n,
      const std::vector<bool>& excluded = {}) const = 0;
};

std::vector<ScoredCode> rank_candidates(std::span<const double> scores, const Vocabulary& vocab,
                                        std::size_t n, const std::vector<bool>& excluded = {});

}  // namespace colorrec
