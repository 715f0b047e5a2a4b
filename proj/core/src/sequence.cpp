#include "colorrec/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "colorrec/error.hpp"
#include "colorrec/random.hpp"
#include "json.hpp"

namespace colorrec {

using nlohmann::json;

std::string to_string(const Token& t) {
  switch (t.kind) {
    case TokenKind::color: return to_string(t.code);
    case TokenKind::pad: return "[PAD]";
    case TokenKind::sep: return "[SEP]";
    case TokenKind::mask: return "[MASK]";
  }
  return "?";
}

Token parse_token(std::string_view text) {
  if (text == "[PAD]") return Token::pad();
  if (text == "[SEP]") return Token::sep();
  if (text == "[MASK]") return Token::mask();
  if (auto code = parse_code(text)) return Token::color(*code);
  throw Error(ErrorCode::parse, "bad token '" + std::string(text) + "'");
}

ColorSequence::ColorSequence() {
  for (int p = 0; p < kSequenceLength; ++p) {
    tokens[p] = is_sep_position(p) ? Token::sep() : Token::pad();
    segments[p] = segment_of(p);
    positions[p] = p;
  }
}

std::size_t ColorSequence::color_count() const {
  return static_cast<std::size_t>(std::count_if(
      tokens.begin(), tokens.end(), [](const Token& t) { return t.kind == TokenKind::color; }));
}

std::vector<int> ColorSequence::color_positions() const {
  std::vector<int> out;
  for (int p = 0; p < kSequenceLength; ++p) {
    if (tokens[p].kind == TokenKind::color) out.push_back(p);
  }
  return out;
}

ColorSequence encode_code_palettes(const CodePalettes& palettes) {
  ColorSequence seq;
  for (Group g : kGroups) {
    const auto& codes = palettes[static_cast<std::size_t>(g)];
    if (codes.size() > kSlotsPerPalette) {
      throw Error(ErrorCode::invalid_argument, "palette longer than 5 colors");
    }
    for (std::size_t i = 0; i < codes.size(); ++i) {
      seq.tokens[slot_position(g, static_cast<int>(i))] = Token::color(codes[i]);
    }
  }
  return seq;
}

ColorSequence encode_multi_palette(const MultiPalette& mp, const VocabConfig& cfg,
                                   const Vocabulary* vocab) {
  CodePalettes codes;
  for (Group g : kGroups) {
    for (const auto& lab : mp[g].colors) {
      ColorCode c = quantize(lab, cfg);
      if (vocab) c = vocab->code_at(vocab->nearest_index(c));
      codes[static_cast<std::size_t>(g)].push_back(c);
    }
  }
  return encode_code_palettes(codes);
}

CodePalettes decode_sequence(const ColorSequence& seq) {
  CodePalettes out;
  for (int p = 0; p < kSequenceLength; ++p) {
    if (seq.tokens[p].kind == TokenKind::color) {
      out[static_cast<std::size_t>(group_at(p))].push_back(seq.tokens[p].code);
    }
  }
  return out;
}

MaskedSequence apply_masking(const ColorSequence& seq, const Vocabulary& vocab,
                             std::uint64_t seed, const MaskingPolicy& policy) {
  std::vector<int> candidates = seq.color_positions();
  if (candidates.empty()) {
    throw Error(ErrorCode::invalid_argument, "sequence has no color tokens to mask");
  }
  if (vocab.num_colors() == 0) throw Error(ErrorCode::invalid_argument, "empty vocabulary");
  Rng rng(seed);
  const auto wanted = static_cast<std::size_t>(
      std::max<long>(1, std::lround(policy.rate * static_cast<double>(candidates.size()))));
  const std::size_t count = std::min(wanted, candidates.size());
  // Partial Fisher-Yates: the first `count` entries are the selection.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + rng.below(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());

  MaskedSequence out{seq, {}};
  for (int p : candidates) {
    MaskedTarget t{p, seq.tokens[p].code, MaskAction::unchanged};
    const double u = rng.uniform();
    if (u < policy.mask_share) {
      t.action = MaskAction::masked;
      out.input.tokens[p] = Token::mask();
    } else if (u < policy.mask_share + policy.random_share) {
      t.action = MaskAction::randomized;
      out.input.tokens[p] = Token::color(vocab.code_at(rng.below(vocab.num_colors())));
    }
    out.targets.push_back(t);
  }
  return out;
}

MaskedSequence mask_at(const ColorSequence& seq, std::span<const int> positions) {
  MaskedSequence out{seq, {}};
  for (int p : positions) {
    if (p < 0 || p >= kSequenceLength) {
      throw Error(ErrorCode::invalid_argument, "position " + std::to_string(p) + " out of range");
    }
    if (seq.tokens[p].kind != TokenKind::color) {
      throw Error(ErrorCode::invalid_argument,
                  "position " + std::to_string(p) + " holds " + to_string(seq.tokens[p]) +
                      ", not a color");
    }
    if (out.input.tokens[p].kind == TokenKind::mask) {
      throw Error(ErrorCode::invalid_argument, "position " + std::to_string(p) + " repeated");
    }
    out.input.tokens[p] = Token::mask();
    out.targets.push_back({p, seq.tokens[p].code, MaskAction::masked});
  }
  std::sort(out.targets.begin(), out.targets.end(),
            [](const MaskedTarget& x, const MaskedTarget& y) { return x.position < y.position; });
  return out;
}

std::string serialize_record(const SequenceRecord& record) {
  json j;
  json tokens = json::array();
  for (const auto& t : record.sequence.tokens) tokens.push_back(to_string(t));
  j["tokens"] = std::move(tokens);
  j["segments"] = record.sequence.segments;
  if (record.probe >= 0) j["probe"] = record.probe;
  if (!record.tag.empty()) j["tag"] = record.tag;
  return j.dump();
}

SequenceRecord parse_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, std::string("malformed record: ") + e.what());
  }
  const auto tokens = j.find("tokens");
  if (tokens == j.end() || !tokens->is_array() || tokens->size() != kSequenceLength) {
    throw Error(ErrorCode::parse, "record needs 18 tokens", "/tokens");
  }
  SequenceRecord rec;
  for (int p = 0; p < kSequenceLength; ++p) {
    const auto& t = (*tokens)[p];
    if (!t.is_string()) throw Error(ErrorCode::parse, "expected string", "/tokens/" + std::to_string(p));
    Token tok = parse_token(t.get_ref<const std::string&>());
    if (is_sep_position(p) != (tok.kind == TokenKind::sep)) {
      throw Error(ErrorCode::parse, "SEP must close each palette", "/tokens/" + std::to_string(p));
    }
    rec.sequence.tokens[p] = tok;
  }
  if (auto seg = j.find("segments"); seg != j.end()) {
    if (!seg->is_array() || seg->size() != kSequenceLength) {
      throw Error(ErrorCode::parse, "record needs 18 segment ids", "/segments");
    }
    for (int p = 0; p < kSequenceLength; ++p) {
      if ((*seg)[p] != segment_of(p)) {
        throw Error(ErrorCode::parse, "segment id disagrees with layout",
                    "/segments/" + std::to_string(p));
      }
    }
  }
  // PAD may only trail the colors of its palette.
  for (Group g : kGroups) {
    bool seen_pad = false;
    for (int s = 0; s < kSlotsPerPalette; ++s) {
      const auto kind = rec.sequence.tokens[slot_position(g, s)].kind;
      if (kind == TokenKind::pad) seen_pad = true;
      else if (seen_pad) throw Error(ErrorCode::parse, "color after PAD", "/tokens/" + std::to_string(slot_position(g, s)));
    }
  }
  if (auto probe = j.find("probe"); probe != j.end()) rec.probe = probe->get<int>();
  if (auto tag = j.find("tag"); tag != j.end()) rec.tag = tag->get<std::string>();
  return rec;
}

void write_corpus(std::ostream& out, std::span<const SequenceRecord> records) {
  for (const auto& r : records) out << serialize_record(r) << '\n';
}

std::vector<SequenceRecord> read_corpus(std::istream& in) {
  std::vector<SequenceRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::parse, e.what(), "line " + std::to_string(lineno));
    }
  }
  return out;
}

void write_corpus_file(const std::string& path, std::span<const SequenceRecord> records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::not_found, "cannot write " + path);
  write_corpus(out, records);
}

std::vector<SequenceRecord> read_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::not_found, "cannot open " + path);
  return read_corpus(in);
}

std::vector<ColorSequence> sequences_of(std::span<const SequenceRecord> records) {
  std::vector<ColorSequence> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.sequence);
  return out;
}

}  // namespace colorrec
