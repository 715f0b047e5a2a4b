#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "colorrec/color.hpp"

namespace colorrec {

struct ColorSequence;

// Token ids. Special tokens occupy the first ids; color codes follow in
// sorted code order.
using TokenId = std::int32_t;
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kSepId = 1;
inline constexpr TokenId kMaskId = 2;
inline constexpr TokenId kNumSpecialTokens = 3;

class Vocabulary {
 public:
  Vocabulary() = default;
  // Codes are deduplicated and sorted. `counts`, when given, must align with
  // `codes` and is summed across duplicates.
  Vocabulary(VocabConfig cfg, std::vector<ColorCode> codes,
             std::vector<std::uint64_t> counts = {});

  const VocabConfig& config() const { return cfg_; }

  // Number of color codes (the prediction candidate set).
  std::size_t num_colors() const { return codes_.size(); }
  // Color codes plus special tokens.
  std::size_t num_tokens() const { return codes_.size() + kNumSpecialTokens; }

  const std::vector<ColorCode>& codes() const { return codes_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  std::optional<std::size_t> index_of(const ColorCode& code) const;
  bool contains(const ColorCode& code) const { return index_of(code).has_value(); }

  // Candidate index of the observed code nearest to `code` by CIEDE2000
  // between bin centers. Exact members map to themselves.
  std::size_t nearest_index(const ColorCode& code) const;

  const ColorCode& code_at(std::size_t index) const { return codes_.at(index); }

  static TokenId token_of_index(std::size_t index) {
    return static_cast<TokenId>(index) + kNumSpecialTokens;
  }
  static std::size_t index_of_token(TokenId id) {
    return static_cast<std::size_t>(id - kNumSpecialTokens);
  }

  friend bool operator==(const Vocabulary& x, const Vocabulary& y) {
    return x.cfg_.bins_per_axis == y.cfg_.bins_per_axis && x.codes_ == y.codes_ &&
           x.counts_ == y.counts_;
  }

 private:
  VocabConfig cfg_;
  std::vector<ColorCode> codes_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<ColorCode, std::size_t> index_;
};

// Codes observed in the corpus plus special tokens. Throws on an empty
// corpus.
Vocabulary build_vocabulary(std::span<const ColorSequence> corpus,
                            const VocabConfig& cfg = {});

}  // namespace colorrec
