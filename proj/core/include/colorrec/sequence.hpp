#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "colorrec/color.hpp"
#include "colorrec/document.hpp"
#include "colorrec/palette.hpp"
#include "colorrec/vocabulary.hpp"

namespace colorrec {

inline constexpr int kSlotsPerPalette = 5;
inline constexpr int kNumPalettes = 3;
inline constexpr int kPaletteStride = kSlotsPerPalette + 1;
inline constexpr int kSequenceLength = kNumPalettes * kPaletteStride;  // 18
inline constexpr int kNumSegments = kNumPalettes + 1;  // id 0 unused

enum class TokenKind : std::uint8_t { color, pad, sep, mask };

struct Token {
  TokenKind kind = TokenKind::pad;
  ColorCode code{};  // meaningful for color tokens only

  static Token color(ColorCode c) { return {TokenKind::color, c}; }
  static Token pad() { return {TokenKind::pad, {}}; }
  static Token sep() { return {TokenKind::sep, {}}; }
  static Token mask() { return {TokenKind::mask, {}}; }

  friend bool operator==(const Token&, const Token&) = default;
};

std::string to_string(const Token& t);
Token parse_token(std::string_view text);

constexpr int slot_position(Group g, int slot) {
  return static_cast<int>(g) * kPaletteStride + slot;
}
constexpr int segment_of(int position) { return position / kPaletteStride + 1; }
constexpr Group group_at(int position) { return static_cast<Group>(position / kPaletteStride); }
constexpr bool is_sep_position(int position) {
  return position % kPaletteStride == kSlotsPerPalette;
}

// Image slots 0-4 and SEP, svg slots and SEP, text slots and SEP. PAD and
// SEP inherit the segment id of their palette.
struct ColorSequence {
  std::array<Token, kSequenceLength> tokens;
  std::array<int, kSequenceLength> segments;
  std::array<int, kSequenceLength> positions;

  ColorSequence();  // all PAD with SEPs in place
  std::size_t color_count() const;
  std::vector<int> color_positions() const;

  friend bool operator==(const ColorSequence&, const ColorSequence&) = default;
};

// Code-level palettes recovered from a sequence.
using CodePalettes = std::array<std::vector<ColorCode>, 3>;

// Quantizes each palette into its slots in weight order. With a vocabulary,
// codes it lacks are replaced by the nearest member.
ColorSequence encode_multi_palette(const MultiPalette& mp, const VocabConfig& cfg = {},
                                   const Vocabulary* vocab = nullptr);
ColorSequence encode_code_palettes(const CodePalettes& palettes);
CodePalettes decode_sequence(const ColorSequence& seq);

enum class MaskAction : std::uint8_t { masked, randomized, unchanged };

struct MaskedTarget {
  int position = 0;
  ColorCode target{};
  MaskAction action = MaskAction::masked;
};

struct MaskedSequence {
  ColorSequence input;
  std::vector<MaskedTarget> targets;  // ascending position
};

using MaskedBatch = std::vector<MaskedSequence>;

struct MaskingPolicy {
  double rate = 0.10;
  double mask_share = 0.80;
  double random_share = 0.10;  // remainder keeps the original token
};

// Selects max(1, round(rate * colors)) color positions. Throws when the
// sequence has no color tokens.
MaskedSequence apply_masking(const ColorSequence& seq, const Vocabulary& vocab,
                             std::uint64_t seed, const MaskingPolicy& policy = {});

// Places MASK at exactly `positions`. Throws on PAD/SEP, out-of-range or
// repeated positions.
MaskedSequence mask_at(const ColorSequence& seq, std::span<const int> positions);

// One line-delimited corpus record. `probe` marks a designated evaluation
// slot (-1 when absent); `tag` is free-form provenance.
struct SequenceRecord {
  ColorSequence sequence;
  int probe = -1;
  std::string tag;

  friend bool operator==(const SequenceRecord&, const SequenceRecord&) = default;
};

std::string serialize_record(const SequenceRecord& record);
SequenceRecord parse_record(std::string_view line);

void write_corpus(std::ostream& out, std::span<const SequenceRecord> records);
std::vector<SequenceRecord> read_corpus(std::istream& in);
void write_corpus_file(const std::string& path, std::span<const SequenceRecord> records);
std::vector<SequenceRecord> read_corpus_file(const std::string& path);

std::vector<ColorSequence> sequences_of(std::span<const SequenceRecord> records);

}  // namespace colorrec
