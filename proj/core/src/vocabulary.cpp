#include "colorrec/vocabulary.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "colorrec/error.hpp"
#include "colorrec/sequence.hpp"

namespace colorrec {

Vocabulary::Vocabulary(VocabConfig cfg, std::vector<ColorCode> codes,
                       std::vector<std::uint64_t> counts)
    : cfg_(cfg) {
  cfg_.validate();
  if (!counts.empty() && counts.size() != codes.size()) {
    throw Error(ErrorCode::invalid_argument, "vocabulary counts misaligned with codes");
  }
  std::map<ColorCode, std::uint64_t> merged;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (!cfg_.contains(codes[i])) {
      throw Error(ErrorCode::unknown_code, "code " + to_string(codes[i]) + " out of range");
    }
    merged[codes[i]] += counts.empty() ? 0 : counts[i];
  }
  for (const auto& [code, count] : merged) {
    index_.emplace(code, codes_.size());
    codes_.push_back(code);
    counts_.push_back(count);
  }
}

std::optional<std::size_t> Vocabulary::index_of(const ColorCode& code) const {
  if (auto it = index_.find(code); it != index_.end()) return it->second;
  return std::nullopt;
}

std::size_t Vocabulary::nearest_index(const ColorCode& code) const {
  if (auto hit = index_of(code)) return *hit;
  if (codes_.empty()) throw Error(ErrorCode::invalid_argument, "empty vocabulary");
  const LabColor target = code_center(code, cfg_);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    const double d = ciede2000(target, code_center(codes_[i], cfg_));
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Vocabulary build_vocabulary(std::span<const ColorSequence> corpus, const VocabConfig& cfg) {
  if (corpus.empty()) throw Error(ErrorCode::invalid_argument, "empty corpus");
  std::vector<ColorCode> codes;
  for (const auto& seq : corpus) {
    for (const auto& tok : seq.tokens) {
      if (tok.kind == TokenKind::color) codes.push_back(tok.code);
    }
  }
  if (codes.empty()) throw Error(ErrorCode::invalid_argument, "corpus has no color tokens");
  std::vector<std::uint64_t> counts(codes.size(), 1);
  return Vocabulary(cfg, std::move(codes), std::move(counts));
}

}  // namespace colorrec
