#include "colorrec/word2vec.hpp"

#include <algorithm>
#include <cmath>

#include "colorrec/error.hpp"
#include "colorrec/random.hpp"

namespace colorrec {
namespace {

std::vector<std::size_t> color_indices(const ColorSequence& seq, const Vocabulary& vocab,
                                       std::span<const int> skip = {}) {
  std::vector<std::size_t> out;
  for (int p = 0; p < kSequenceLength; ++p) {
    const Token& t = seq.tokens[static_cast<std::size_t>(p)];
    if (t.kind != TokenKind::color) continue;
    if (std::find(skip.begin(), skip.end(), p) != skip.end()) continue;
    out.push_back(vocab.nearest_index(t.code));
  }
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SkipGramBaseline::SkipGramBaseline(std::span<const ColorSequence> corpus, Vocabulary vocab,
                                   const SkipGramOptions& opts)
    : vocab_(std::move(vocab)), dim_(opts.dim) {
  if (dim_ < 1 || opts.epochs < 0 || opts.negatives < 0) {
    throw Error(ErrorCode::invalid_argument, "invalid skip-gram options");
  }
  const std::size_t v = vocab_.num_colors();
  if (v == 0) throw Error(ErrorCode::invalid_argument, "empty vocabulary");
  const auto d = static_cast<std::size_t>(dim_);
  Rng rng(opts.seed);
  in_.resize(v * d);
  out_.assign(v * d, 0.0f);
  for (auto& x : in_) x = static_cast<float>((rng.uniform() - 0.5) / dim_);

  // Noise distribution from corpus frequencies.
  std::vector<std::vector<std::size_t>> docs;
  std::vector<double> freq(v, 0.0);
  std::size_t pairs = 0;
  for (const auto& seq : corpus) {
    auto ids = color_indices(seq, vocab_);
    for (auto i : ids) freq[i] += 1.0;
    pairs += ids.size() * (ids.size() > 0 ? ids.size() - 1 : 0);
    docs.push_back(std::move(ids));
  }
  std::vector<double> cumulative(v);
  double total = 0.0;
  for (std::size_t i = 0; i < v; ++i) cumulative[i] = total += std::pow(freq[i], opts.unigram_power);
  if (total <= 0.0) return;
  const auto sample_noise = [&] {
    const double u = rng.uniform() * total;
    return std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin()),
        v - 1);
  };

  const double all = static_cast<double>(pairs) * std::max(1, opts.epochs);
  double seen = 0.0;
  std::vector<double> grad(d);
  std::vector<std::size_t> doc_order(docs.size());
  for (std::size_t i = 0; i < doc_order.size(); ++i) doc_order[i] = i;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(doc_order.begin(), doc_order.end());
    for (std::size_t di : doc_order) {
      const auto& ids = docs[di];
      for (std::size_t a = 0; a < ids.size(); ++a) {
        for (std::size_t b = 0; b < ids.size(); ++b) {
          if (a == b) continue;
          const double lr = opts.learning_rate * std::max(1e-4, 1.0 - seen / all);
          seen += 1.0;
          float* center = &in_[ids[a] * d];
          std::fill(grad.begin(), grad.end(), 0.0);
          for (int k = 0; k <= opts.negatives; ++k) {
            const std::size_t target = k == 0 ? ids[b] : sample_noise();
            if (k > 0 && target == ids[b]) continue;
            float* ctx = &out_[target * d];
            double dot = 0.0;
            for (std::size_t j = 0; j < d; ++j) dot += static_cast<double>(center[j]) * ctx[j];
            const double g = lr * ((k == 0 ? 1.0 : 0.0) - sigmoid(dot));
            for (std::size_t j = 0; j < d; ++j) {
              grad[j] += g * ctx[j];
              ctx[j] += static_cast<float>(g * center[j]);
            }
          }
          for (std::size_t j = 0; j < d; ++j) center[j] += static_cast<float>(grad[j]);
        }
      }
    }
  }
}

std::vector<double> SkipGramBaseline::scores(const ColorSequence& seq, std::span<const int> masked) const {
  const std::size_t v = vocab_.num_colors();
  const auto d = static_cast<std::size_t>(dim_);
  std::vector<double> mean(d, 0.0);
  const auto ctx = color_indices(seq, vocab_, masked);
  for (auto i : ctx) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += in_[i * d + j];
  }
  double mean_norm = 0.0;
  for (double x : mean) mean_norm += x * x;
  mean_norm = std::sqrt(mean_norm);

  std::vector<double> cos(v, 0.0);
  for (std::size_t c = 0; c < v; ++c) {
    double dot = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      dot += mean[j] * in_[c * d + j];
      norm += static_cast<double>(in_[c * d + j]) * in_[c * d + j];
    }
    if (mean_norm > 0.0 && norm > 0.0) cos[c] = dot / (mean_norm * std::sqrt(norm));
  }
  const double top = *std::max_element(cos.begin(), cos.end());
  double z = 0.0;
  for (double& s : cos) z += s = std::exp(s - top);
  for (double& s : cos) s /= z;
  return cos;
}

std::vector<std::vector<ScoredCode>> SkipGramBaseline::predict_topn(const ColorSequence& seq,
                                                                    std::span<const int> positions,
                                                                    std::size_t n,
                                                                    const std::vector<bool>& excluded) const {
  for (int p : positions) {
    if (p < 0 || p >= kSequenceLength) throw Error(ErrorCode::invalid_argument, "position out of range");
    const auto kind = seq.tokens[static_cast<std::size_t>(p)].kind;
    if (kind != TokenKind::color && kind != TokenKind::mask) {
      throw Error(ErrorCode::invalid_slot, "position " + std::to_string(p) + " holds no color");
    }
  }
  const auto s = scores(seq, positions);
  std::vector<std::vector<ScoredCode>> out;
  for (std::size_t i = 0; i < positions.size(); ++i) out.push_back(rank_candidates(s, vocab_, n, excluded));
  return out;
}

}  // namespace colorrec
