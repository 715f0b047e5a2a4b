#include "colorrec/recommend.hpp"

#include <charconv>
#include <cmath>

#include "colorrec/error.hpp"

namespace colorrec {

std::string to_string(const SlotRef& s) {
  return std::string(to_string(s.group)) + ":" + std::to_string(s.slot);
}

std::optional<SlotRef> parse_slot(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  auto group = parse_group(text.substr(0, colon));
  if (!group) return std::nullopt;
  int slot = 0;
  const auto rest = text.substr(colon + 1);
  auto [end, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), slot);
  if (ec != std::errc{} || end != rest.data() + rest.size() || slot < 0 || slot >= kSlotsPerPalette) {
    return std::nullopt;
  }
  return SlotRef{*group, slot};
}

void check_slots(const MultiPalette& palettes, std::span<const SlotRef> slots) {
  if (slots.empty()) throw Error(ErrorCode::invalid_slot, "no slots requested");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const SlotRef& s = slots[i];
    if (s.slot < 0 || s.slot >= kSlotsPerPalette) {
      throw Error(ErrorCode::invalid_slot, "slot index out of range: " + to_string(s));
    }
    const Palette& p = palettes[s.group];
    if (p.empty()) {
      throw Error(ErrorCode::invalid_slot, "the " + std::string(to_string(s.group)) + " group is empty");
    }
    if (static_cast<std::size_t>(s.slot) >= p.size()) {
      throw Error(ErrorCode::invalid_slot, "slot " + to_string(s) + " is padding");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (slots[j] == s) throw Error(ErrorCode::invalid_slot, "slot " + to_string(s) + " repeated");
    }
  }
}

namespace {

std::vector<double> adjusted_row(const Matrix<float>& dist, Eigen::Index row, const Vocabulary& vocab,
                                 double penalty) {
  std::vector<double> out(static_cast<std::size_t>(dist.cols()));
  double total = 0.0;
  for (std::size_t c = 0; c < out.size(); ++c) {
    double p = dist(row, static_cast<Eigen::Index>(c));
    if (penalty > 0.0) {
      const double count = std::max<double>(1.0, static_cast<double>(vocab.counts()[c]));
      p /= std::pow(count, penalty);
    }
    out[c] = p;
    total += p;
  }
  if (penalty > 0.0 && total > 0.0) {
    for (double& p : out) p /= total;
  }
  return out;
}

Recommendation make_recommendation(const SlotRef& slot, const MultiPalette& palettes,
                                   const std::vector<ScoredCode>& ranked, const Vocabulary& vocab) {
  Recommendation rec{slot, palettes[slot.group].colors[static_cast<std::size_t>(slot.slot)], {}};
  int rank = 1;
  for (const auto& s : ranked) {
    rec.candidates.push_back({s.code, display_color(s.code, vocab.config()), s.probability, rank++});
  }
  return rec;
}

}  // namespace

std::vector<Recommendation> recommend_for_palettes(const MultiPalette& palettes,
                                                   std::span<const SlotRef> slots, std::size_t n,
                                                   const TrainedModel& model,
                                                   const RecommendOptions& opts,
                                                   const std::set<ColorCode>& exclude) {
  check_slots(palettes, slots);
  if (n == 0) throw Error(ErrorCode::invalid_argument, "n must be positive");
  const Vocabulary& vocab = model.vocab();
  std::vector<bool> excluded;
  if (!exclude.empty()) {
    excluded.assign(vocab.num_colors(), false);
    std::size_t count = 0;
    for (const auto& code : exclude) {
      if (auto idx = vocab.index_of(code); idx && !excluded[*idx]) {
        excluded[*idx] = true;
        ++count;
      }
    }
    if (count == vocab.num_colors()) {
      throw Error(ErrorCode::invalid_argument, "exclusion covers the whole vocabulary");
    }
  }

  ColorSequence seq = encode_multi_palette(palettes, vocab.config(), &vocab);
  std::vector<Recommendation> out;
  if (!opts.iterative) {
    std::vector<int> positions;
    for (const auto& s : slots) positions.push_back(s.position());
    const Matrix<float> dist = model.distributions(seq, positions);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto row = adjusted_row(dist, static_cast<Eigen::Index>(i), vocab, opts.frequency_penalty);
      out.push_back(make_recommendation(slots[i], palettes, rank_candidates(row, vocab, n, excluded), vocab));
    }
    return out;
  }

  // Iterative refill: later slots see earlier argmax commitments.
  for (const auto& s : slots) seq.tokens[s.position()] = Token::mask();
  for (const auto& s : slots) {
    const int pos = s.position();
    const Matrix<float> dist = model.distributions(seq, std::span<const int>(&pos, 1));
    const auto row = adjusted_row(dist, 0, vocab, opts.frequency_penalty);
    auto ranked = rank_candidates(row, vocab, n, excluded);
    seq.tokens[pos] = Token::color(ranked.front().code);
    out.push_back(make_recommendation(s, palettes, ranked, vocab));
  }
  return out;
}

std::vector<Recommendation> recommend(const GraphicDocument& doc, std::span<const SlotRef> slots,
                                      std::size_t n, const TrainedModel& model,
                                      const RecommendOptions& opts) {
  const MultiPalette palettes = extract_multi_palette(doc, opts.palette_seed, opts.palette);
  return recommend_for_palettes(palettes, slots, n, model, opts);
}

Recommendation recommend_excluding(const GraphicDocument& doc, const SlotRef& slot, std::size_t n,
                                   const std::set<ColorCode>& exclude, const TrainedModel& model,
                                   const RecommendOptions& opts) {
  const MultiPalette palettes = extract_multi_palette(doc, opts.palette_seed, opts.palette);
  return recommend_for_palettes(palettes, std::span<const SlotRef>(&slot, 1), n, model, opts, exclude)
      .front();
}

}  // namespace colorrec
