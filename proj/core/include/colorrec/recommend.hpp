#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colorrec/checkpoint.hpp"
#include "colorrec/document.hpp"
#include "colorrec/palette.hpp"

namespace colorrec {

struct SlotRef {
  Group group = Group::svg;
  int slot = 0;  // 0-4, in palette weight order

  int position() const { return slot_position(group, slot); }
  friend auto operator<=>(const SlotRef&, const SlotRef&) = default;
};

std::string to_string(const SlotRef& s);
// "svg:0" style.
std::optional<SlotRef> parse_slot(std::string_view text);

struct Candidate {
  ColorCode code;
  RgbColor display;
  double probability = 0.0;
  int rank = 0;  // 1-based
};

struct Recommendation {
  SlotRef slot;
  LabColor source;  // palette color currently in the slot
  std::vector<Candidate> candidates;
};

struct RecommendOptions {
  std::uint64_t palette_seed = 0;
  PaletteOptions palette;
  // Predict slots one at a time, committing each argmax before the next.
  bool iterative = false;
  // Divides probabilities by (corpus count)^penalty before ranking; 0 is off.
  double frequency_penalty = 0.0;
};

// Throws Error(invalid_slot) for a slot beyond its palette's length,
// including slots in an empty group.
void check_slots(const MultiPalette& palettes, std::span<const SlotRef> slots);

std::vector<Recommendation> recommend(const GraphicDocument& doc, std::span<const SlotRef> slots,
                                      std::size_t n, const TrainedModel& model,
                                      const RecommendOptions& opts = {});

// Same, from already extracted palettes.
std::vector<Recommendation> recommend_for_palettes(const MultiPalette& palettes,
                                                   std::span<const SlotRef> slots, std::size_t n,
                                                   const TrainedModel& model,
                                                   const RecommendOptions& opts = {},
                                                   const std::set<ColorCode>& exclude = {});

// Top-n with `exclude` removed. Throws when nothing remains.
Recommendation recommend_excluding(const GraphicDocument& doc, const SlotRef& slot, std::size_t n,
                                   const std::set<ColorCode>& exclude, const TrainedModel& model,
                                   const RecommendOptions& opts = {});

}  // namespace colorrec
