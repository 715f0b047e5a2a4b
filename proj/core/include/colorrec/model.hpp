#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colorrec/random.hpp"
#include "colorrec/sequence.hpp"
#include "colorrec/vocabulary.hpp"

namespace colorrec {

struct ModelConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 256;
  int vocab_size = 0;  // number of color codes; special tokens are added on top
  bool use_segment_embeddings = true;
  bool use_position_embeddings = false;
  double dropout = 0.1;  // training only
  double init_std = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
  int token_rows() const { return vocab_size + kNumSpecialTokens; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
struct TensorView {
  std::string name;
  T* data;
  Eigen::Index rows;
  Eigen::Index cols;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
  std::span<T> values() const { return {data, size()}; }
};

// Pre-layer-norm encoder block. Projections are stored input-major
// (d_in x d_out) so that y = x * W + b.
template <typename T>
struct LayerParams {
  RowVector<T> ln1_gain, ln1_bias;
  Matrix<T> wq, wk, wv, wo;
  RowVector<T> bq, bk, bv, bo;
  RowVector<T> ln2_gain, ln2_bias;
  Matrix<T> w1, w2;
  RowVector<T> b1, b2;
};

template <typename T>
struct ModelParams {
  Matrix<T> token_embedding;     // token_rows x d
  Matrix<T> segment_embedding;   // kNumSegments x d, or empty when unused
  Matrix<T> position_embedding;  // kSequenceLength x d, or empty when unused
  std::vector<LayerParams<T>> layers;
  RowVector<T> final_gain, final_bias;
  Matrix<T> output_weight;  // d x vocab_size, untied from the token table
  RowVector<T> output_bias;

  // All tensors zero-filled with the shapes implied by `cfg`.
  static ModelParams zeros(const ModelConfig& cfg);
  // BERT-style init: N(0, init_std) weights, unit gains, zero biases.
  static ModelParams initialized(const ModelConfig& cfg);

  // Stable traversal order used by the optimizer, checkpoints and tests.
  std::vector<TensorView<T>> tensors();
  std::vector<TensorView<const T>> tensors() const;

  void set_zero();
  std::size_t parameter_count() const;

  template <typename U>
  ModelParams<U> cast() const;
};

// A sequence ready for the network: token ids plus the masked positions and
// their candidate indices.
struct EncodedExample {
  std::array<TokenId, kSequenceLength> ids{};
  std::vector<int> positions;
  std::vector<std::size_t> targets;
};

// Maps tokens through the vocabulary; unknown codes go to their nearest
// member.
EncodedExample encode_example(const MaskedSequence& masked, const Vocabulary& vocab);
std::array<TokenId, kSequenceLength> encode_tokens(const ColorSequence& seq, const Vocabulary& vocab);

struct BatchLoss {
  double loss = 0.0;        // mean NLL over all targets in the batch
  std::size_t targets = 0;
  std::size_t correct = 0;  // argmax hits
};

using IdArray = std::array<TokenId, kSequenceLength>;

template <typename T>
class MaskedColorModel {
 public:
  explicit MaskedColorModel(const ModelConfig& cfg);
  MaskedColorModel(const ModelConfig& cfg, ModelParams<T> params);

  const ModelConfig& config() const { return cfg_; }
  ModelParams<T>& params() { return params_; }
  const ModelParams<T>& params() const { return params_; }

  // Softmax over color candidates at each requested position (one row per
  // position). PAD keys are excluded from attention.
  Matrix<T> predict(const IdArray& ids, std::span<const int> positions) const;

  // Attention probabilities of one head in one layer, for inspection.
  Matrix<T> attention(const IdArray& ids, int layer, int head) const;

  BatchLoss loss(std::span<const EncodedExample> batch) const;

  // Mean cross-entropy over the batch's targets; gradients are accumulated
  // into `grads` (callers zero it). Dropout is active only when `dropout_rng`
  // is non-null.
  BatchLoss loss_and_gradients(std::span<const EncodedExample> batch, ModelParams<T>& grads,
                               Rng* dropout_rng) const;

 private:
  struct Cache;
  void forward(std::span<const IdArray> batch, Cache& cache, Rng* rng) const;

  ModelConfig cfg_;
  ModelParams<T> params_;
};

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  ModelParams<U> out;
  out.token_embedding = token_embedding.template cast<U>();
  out.segment_embedding = segment_embedding.template cast<U>();
  out.position_embedding = position_embedding.template cast<U>();
  out.layers.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& s = layers[i];
    auto& d = out.layers[i];
    d.ln1_gain = s.ln1_gain.template cast<U>();
    d.ln1_bias = s.ln1_bias.template cast<U>();
    d.wq = s.wq.template cast<U>();
    d.wk = s.wk.template cast<U>();
    d.wv = s.wv.template cast<U>();
    d.wo = s.wo.template cast<U>();
    d.bq = s.bq.template cast<U>();
    d.bk = s.bk.template cast<U>();
    d.bv = s.bv.template cast<U>();
    d.bo = s.bo.template cast<U>();
    d.ln2_gain = s.ln2_gain.template cast<U>();
    d.ln2_bias = s.ln2_bias.template cast<U>();
    d.w1 = s.w1.template cast<U>();
    d.w2 = s.w2.template cast<U>();
    d.b1 = s.b1.template cast<U>();
    d.b2 = s.b2.template cast<U>();
  }
  out.final_gain = final_gain.template cast<U>();
  out.final_bias = final_bias.template cast<U>();
  out.output_weight = output_weight.template cast<U>();
  out.output_bias = output_bias.template cast<U>();
  return out;
}

extern template struct ModelParams<float>;
extern template struct ModelParams<double>;
extern template class MaskedColorModel<float>;
extern template class MaskedColorModel<double>;

}  // namespace colorrec
