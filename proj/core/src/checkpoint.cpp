#include "colorrec/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "colorrec/error.hpp"

namespace colorrec {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'R', 'M', 'C'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename U>
  void uint(U v) {
    static_assert(std::is_unsigned_v<U>);
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out_.write(reinterpret_cast<const char*>(buf), sizeof(U));
  }
  void i32(std::int32_t v) { uint(static_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    uint(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename U>
  U uint() {
    unsigned char buf[sizeof(U)];
    read(buf, sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(uint<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
  std::string str() {
    const auto n = uint<std::uint32_t>();
    if (n > 4096) throw Error(ErrorCode::format, "checkpoint string too long");
    std::string s(n, '\0');
    read(s.data(), n);
    return s;
  }
  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw Error(ErrorCode::format, "truncated checkpoint");
    }
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.uint(kCheckpointVersion);
  const ModelConfig& c = ckpt.config;
  w.i32(c.d_model);
  w.i32(c.n_layers);
  w.i32(c.n_heads);
  w.i32(c.d_ff);
  w.i32(c.vocab_size);
  w.uint(static_cast<std::uint8_t>(c.use_segment_embeddings));
  w.uint(static_cast<std::uint8_t>(c.use_position_embeddings));
  w.f64(c.dropout);
  w.f64(c.init_std);
  w.uint(c.seed);

  w.i32(ckpt.vocab.config().bins_per_axis);
  w.uint(static_cast<std::uint32_t>(ckpt.vocab.num_colors()));
  for (std::size_t i = 0; i < ckpt.vocab.num_colors(); ++i) {
    const ColorCode& code = ckpt.vocab.codes()[i];
    w.uint(code.li);
    w.uint(code.ai);
    w.uint(code.bi);
    w.uint(ckpt.vocab.counts()[i]);
  }

  const auto tensors = ckpt.params.tensors();
  w.uint(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.str(t.name);
    w.uint(static_cast<std::uint32_t>(t.rows));
    w.uint(static_cast<std::uint32_t>(t.cols));
    for (float v : t.values()) w.f32(v);
  }
  if (!out) throw Error(ErrorCode::format, "checkpoint write failed");
}

Checkpoint load_checkpoint(std::istream& in) {
  Reader r(in);
  std::array<char, 4> magic{};
  r.read(magic.data(), magic.size());
  if (magic != kMagic) throw Error(ErrorCode::format, "not a checkpoint (bad magic)");
  const auto version = r.uint<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::format, "checkpoint version " + std::to_string(version) +
                                       " unsupported (expected " +
                                       std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  ModelConfig& c = ckpt.config;
  c.d_model = r.i32();
  c.n_layers = r.i32();
  c.n_heads = r.i32();
  c.d_ff = r.i32();
  c.vocab_size = r.i32();
  c.use_segment_embeddings = r.uint<std::uint8_t>() != 0;
  c.use_position_embeddings = r.uint<std::uint8_t>() != 0;
  c.dropout = r.f64();
  c.init_std = r.f64();
  c.seed = r.uint<std::uint64_t>();
  c.validate();

  VocabConfig vcfg{r.i32()};
  vcfg.validate();
  const auto n_codes = r.uint<std::uint32_t>();
  if (static_cast<int>(n_codes) != c.vocab_size) {
    throw Error(ErrorCode::format, "vocabulary size disagrees with model config");
  }
  std::vector<ColorCode> codes(n_codes);
  std::vector<std::uint64_t> counts(n_codes);
  for (std::uint32_t i = 0; i < n_codes; ++i) {
    codes[i].li = r.uint<std::uint16_t>();
    codes[i].ai = r.uint<std::uint16_t>();
    codes[i].bi = r.uint<std::uint16_t>();
    counts[i] = r.uint<std::uint64_t>();
  }
  ckpt.vocab = Vocabulary(vcfg, codes, counts);
  if (ckpt.vocab.codes() != codes) throw Error(ErrorCode::format, "vocabulary not in canonical order");

  ckpt.params = ModelParams<float>::zeros(c);
  auto tensors = ckpt.params.tensors();
  const auto n_tensors = r.uint<std::uint32_t>();
  if (n_tensors != tensors.size()) throw Error(ErrorCode::format, "tensor count mismatch");
  for (auto& t : tensors) {
    const std::string name = r.str();
    const auto rows = r.uint<std::uint32_t>();
    const auto cols = r.uint<std::uint32_t>();
    if (name != t.name || rows != t.rows || cols != t.cols) {
      throw Error(ErrorCode::format, "unexpected tensor " + name);
    }
    for (float& v : t.values()) v = r.f32();
  }
  return ckpt;
}

void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::not_found, "cannot write " + path);
  save_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "cannot open " + path);
  return load_checkpoint(in);
}

std::vector<std::uint8_t> checkpoint_bytes(const Checkpoint& ckpt) {
  std::ostringstream out(std::ios::binary);
  save_checkpoint(out, ckpt);
  const std::string s = out.str();
  return {s.begin(), s.end()};
}

TrainedModel::TrainedModel(Checkpoint ckpt)
    : ckpt_(std::move(ckpt)), model_(ckpt_.config, ckpt_.params) {
  if (static_cast<std::size_t>(ckpt_.config.vocab_size) != ckpt_.vocab.num_colors()) {
    throw Error(ErrorCode::invalid_argument, "checkpoint vocabulary does not match model");
  }
}

Matrix<float> TrainedModel::distributions(const ColorSequence& seq, std::span<const int> positions) const {
  ColorSequence masked = seq;
  for (int p : positions) {
    if (p < 0 || p >= kSequenceLength) {
      throw Error(ErrorCode::invalid_argument, "position " + std::to_string(p) + " out of range");
    }
    const auto kind = masked.tokens[p].kind;
    if (kind != TokenKind::color && kind != TokenKind::mask) {
      throw Error(ErrorCode::invalid_argument,
                  "position " + std::to_string(p) + " is not a color slot");
    }
    masked.tokens[p] = Token::mask();
  }
  return model_.predict(encode_tokens(masked, ckpt_.vocab), positions);
}

std::vector<ScoredCode> rank_candidates(std::span<const double> probabilities, const Vocabulary& vocab,
                                        std::size_t n, const std::vector<bool>& excluded) {
  std::vector<std::size_t> order;
  order.reserve(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (excluded.empty() || !excluded[i]) order.push_back(i);
  }
  n = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t x, std::size_t y) {
                      if (probabilities[x] != probabilities[y]) return probabilities[x] > probabilities[y];
                      return x < y;
                    });
  std::vector<ScoredCode> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({vocab.code_at(order[i]), order[i], probabilities[order[i]]});
  }
  return out;
}

std::vector<std::vector<ScoredCode>> TrainedModel::predict_topn(const ColorSequence& seq,
                                                                std::span<const int> positions,
                                                                std::size_t n,
                                                                const std::vector<bool>& excluded) const {
  const Matrix<float> dist = distributions(seq, positions);
  std::vector<std::vector<ScoredCode>> out;
  std::vector<double> row(static_cast<std::size_t>(dist.cols()));
  for (Eigen::Index r = 0; r < dist.rows(); ++r) {
    for (Eigen::Index c = 0; c < dist.cols(); ++c) row[static_cast<std::size_t>(c)] = dist(r, c);
    out.push_back(rank_candidates(row, ckpt_.vocab, n, excluded));
  }
  return out;
}

}  // namespace colorrec
