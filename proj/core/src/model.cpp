#include "colorrec/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "colorrec/error.hpp"

namespace colorrec {

void ModelConfig::validate() const {
  if (d_model <= 0 || n_layers < 0 || n_heads <= 0 || d_ff <= 0) {
    throw Error(ErrorCode::invalid_argument, "model dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw Error(ErrorCode::invalid_argument, "d_model must be divisible by n_heads");
  }
  if (vocab_size <= 0) throw Error(ErrorCode::invalid_argument, "vocab_size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "dropout must be in [0, 1)");
  }
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelConfig& cfg) {
  cfg.validate();
  const int d = cfg.d_model;
  ModelParams p;
  p.token_embedding = Matrix<T>::Zero(cfg.token_rows(), d);
  if (cfg.use_segment_embeddings) p.segment_embedding = Matrix<T>::Zero(kNumSegments, d);
  if (cfg.use_position_embeddings) p.position_embedding = Matrix<T>::Zero(kSequenceLength, d);
  p.layers.resize(static_cast<std::size_t>(cfg.n_layers));
  for (auto& l : p.layers) {
    l.ln1_gain = RowVector<T>::Zero(d);
    l.ln1_bias = RowVector<T>::Zero(d);
    l.wq = l.wk = l.wv = l.wo = Matrix<T>::Zero(d, d);
    l.bq = l.bk = l.bv = l.bo = RowVector<T>::Zero(d);
    l.ln2_gain = RowVector<T>::Zero(d);
    l.ln2_bias = RowVector<T>::Zero(d);
    l.w1 = Matrix<T>::Zero(d, cfg.d_ff);
    l.b1 = RowVector<T>::Zero(cfg.d_ff);
    l.w2 = Matrix<T>::Zero(cfg.d_ff, d);
    l.b2 = RowVector<T>::Zero(d);
  }
  p.final_gain = RowVector<T>::Zero(d);
  p.final_bias = RowVector<T>::Zero(d);
  p.output_weight = Matrix<T>::Zero(d, cfg.vocab_size);
  p.output_bias = RowVector<T>::Zero(cfg.vocab_size);
  return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::initialized(const ModelConfig& cfg) {
  ModelParams p = zeros(cfg);
  Rng rng(cfg.seed);
  const auto fill = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = static_cast<T>(rng.normal() * cfg.init_std);
    }
  };
  fill(p.token_embedding);
  fill(p.segment_embedding);
  fill(p.position_embedding);
  for (auto& l : p.layers) {
    l.ln1_gain.setOnes();
    l.ln2_gain.setOnes();
    fill(l.wq);
    fill(l.wk);
    fill(l.wv);
    fill(l.wo);
    fill(l.w1);
    fill(l.w2);
  }
  p.final_gain.setOnes();
  fill(p.output_weight);
  return p;
}

namespace {

template <typename P, typename View>
std::vector<View> collect_tensors(P& p) {
  std::vector<View> out;
  const auto add = [&](std::string name, auto& m) {
    out.push_back(View{std::move(name), m.data(), m.rows(), m.cols()});
  };
  add("token_embedding", p.token_embedding);
  if (p.segment_embedding.size() > 0) add("segment_embedding", p.segment_embedding);
  if (p.position_embedding.size() > 0) add("position_embedding", p.position_embedding);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string pre = "layer" + std::to_string(i) + ".";
    add(pre + "ln1_gain", l.ln1_gain);
    add(pre + "ln1_bias", l.ln1_bias);
    add(pre + "wq", l.wq);
    add(pre + "bq", l.bq);
    add(pre + "wk", l.wk);
    add(pre + "bk", l.bk);
    add(pre + "wv", l.wv);
    add(pre + "bv", l.bv);
    add(pre + "wo", l.wo);
    add(pre + "bo", l.bo);
    add(pre + "ln2_gain", l.ln2_gain);
    add(pre + "ln2_bias", l.ln2_bias);
    add(pre + "w1", l.w1);
    add(pre + "b1", l.b1);
    add(pre + "w2", l.w2);
    add(pre + "b2", l.b2);
  }
  add("final_gain", p.final_gain);
  add("final_bias", p.final_bias);
  add("output_weight", p.output_weight);
  add("output_bias", p.output_bias);
  return out;
}

}  // namespace

template <typename T>
std::vector<TensorView<T>> ModelParams<T>::tensors() {
  return collect_tensors<ModelParams<T>, TensorView<T>>(*this);
}

template <typename T>
std::vector<TensorView<const T>> ModelParams<T>::tensors() const {
  return collect_tensors<const ModelParams<T>, TensorView<const T>>(*this);
}

template <typename T>
void ModelParams<T>::set_zero() {
  for (auto& t : tensors()) std::fill(t.data, t.data + t.size(), T(0));
}

template <typename T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

std::array<TokenId, kSequenceLength> encode_tokens(const ColorSequence& seq, const Vocabulary& vocab) {
  std::array<TokenId, kSequenceLength> ids{};
  for (int p = 0; p < kSequenceLength; ++p) {
    const Token& t = seq.tokens[p];
    switch (t.kind) {
      case TokenKind::pad: ids[p] = kPadId; break;
      case TokenKind::sep: ids[p] = kSepId; break;
      case TokenKind::mask: ids[p] = kMaskId; break;
      case TokenKind::color: ids[p] = Vocabulary::token_of_index(vocab.nearest_index(t.code)); break;
    }
  }
  return ids;
}

EncodedExample encode_example(const MaskedSequence& masked, const Vocabulary& vocab) {
  EncodedExample ex;
  ex.ids = encode_tokens(masked.input, vocab);
  for (const auto& t : masked.targets) {
    ex.positions.push_back(t.position);
    ex.targets.push_back(vocab.nearest_index(t.target));
  }
  return ex;
}

namespace {

constexpr double kLayerNormEps = 1e-5;

template <typename T>
using ColVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
struct NormCache {
  Matrix<T> hat;
  ColVector<T> rstd;
};

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, const RowVector<T>& gain, const RowVector<T>& bias,
                     NormCache<T>& cache) {
  const auto rows = x.rows();
  const auto d = static_cast<T>(x.cols());
  cache.hat.resize(rows, x.cols());
  cache.rstd.resize(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const T mean = x.row(r).sum() / d;
    const auto centered = (x.row(r).array() - mean).matrix();
    const T var = centered.squaredNorm() / d;
    const T rstd = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    cache.rstd(r) = rstd;
    cache.hat.row(r) = centered * rstd;
  }
  return (cache.hat.array().rowwise() * gain.array()).rowwise() + bias.array();
}

template <typename T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const RowVector<T>& gain, const NormCache<T>& c,
                              RowVector<T>& dgain, RowVector<T>& dbias) {
  dgain += (dy.array() * c.hat.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  const Matrix<T> dhat = (dy.array().rowwise() * gain.array()).matrix();
  const auto d = static_cast<T>(dy.cols());
  Matrix<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T mean_dhat = dhat.row(r).sum() / d;
    const T mean_dhat_hat = dhat.row(r).dot(c.hat.row(r)) / d;
    dx.row(r) = c.rstd(r) * (dhat.row(r).array() - mean_dhat - c.hat.row(r).array() * mean_dhat_hat).matrix();
  }
  return dx;
}

template <typename T>
T gelu(T u) {
  return T(0.5) * u * (T(1) + std::erf(u / std::numbers::sqrt2_v<T>));
}

template <typename T>
T gelu_grad(T u) {
  const T cdf = T(0.5) * (T(1) + std::erf(u / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T(-0.5) * u * u) * std::numbers::inv_sqrtpi_v<T> / std::numbers::sqrt2_v<T>;
  return cdf + u * pdf;
}

template <typename T>
void softmax_rows(Matrix<T>& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const T mx = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - mx).exp().matrix();
    m.row(r) /= m.row(r).sum();
  }
}

// Inverted dropout mask: entries are 0 or 1/(1-p).
template <typename T>
Matrix<T> dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  Matrix<T> mask(rows, cols);
  const T keep = static_cast<T>(1.0 / (1.0 - p));
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.uniform() < p ? T(0) : keep;
  }
  return mask;
}

}  // namespace

template <typename T>
struct MaskedColorModel<T>::Cache {
  struct Layer {
    NormCache<T> ln1;
    Matrix<T> h1, q, k, v, ctx;
    std::vector<Matrix<T>> probs;  // sequence-major, then head
    Matrix<T> attn_mask;
    NormCache<T> ln2;
    Matrix<T> h2, u, g;
    Matrix<T> ff_mask;
  };
  std::size_t sequences = 0;
  Matrix<T> embed_mask;
  std::vector<Layer> layers;
  NormCache<T> final_norm;
  Matrix<T> hidden;  // final normalized states, (sequences * L) x d
  std::vector<bool> key_valid;
};

template <typename T>
MaskedColorModel<T>::MaskedColorModel(const ModelConfig& cfg)
    : MaskedColorModel(cfg, ModelParams<T>::initialized(cfg)) {}

template <typename T>
MaskedColorModel<T>::MaskedColorModel(const ModelConfig& cfg, ModelParams<T> params)
    : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  const ModelParams<T> ref = ModelParams<T>::zeros(cfg_);
  const auto want = ref.tensors();
  const auto have = std::as_const(params_).tensors();
  if (want.size() != have.size()) {
    throw Error(ErrorCode::invalid_argument, "parameter set does not match model config");
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].name != have[i].name || want[i].rows != have[i].rows || want[i].cols != have[i].cols) {
      throw Error(ErrorCode::invalid_argument, "tensor " + have[i].name + " has wrong shape");
    }
  }
}

// Sequences are stacked row-wise so the dense projections run as one
// product per batch; attention stays within each sequence's block.
template <typename T>
void MaskedColorModel<T>::forward(std::span<const IdArray> batch, Cache& cache, Rng* rng) const {
  const int d = cfg_.d_model;
  const int heads = cfg_.n_heads;
  const int dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const bool drop = rng != nullptr && cfg_.dropout > 0.0;
  const auto& p = params_;
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index rows = n * kSequenceLength;
  constexpr Eigen::Index L = kSequenceLength;

  cache.sequences = batch.size();
  cache.key_valid.assign(static_cast<std::size_t>(rows), false);
  Matrix<T> x(rows, d);
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto& ids = batch[static_cast<std::size_t>(b)];
    for (int pos = 0; pos < kSequenceLength; ++pos) {
      if (ids[pos] < 0 || ids[pos] >= p.token_embedding.rows()) {
        throw Error(ErrorCode::invalid_argument, "token id out of range");
      }
      const Eigen::Index r = b * L + pos;
      x.row(r) = p.token_embedding.row(ids[pos]);
      if (cfg_.use_segment_embeddings) x.row(r) += p.segment_embedding.row(segment_of(pos));
      if (cfg_.use_position_embeddings) x.row(r) += p.position_embedding.row(pos);
      cache.key_valid[static_cast<std::size_t>(r)] = ids[pos] != kPadId;
    }
  }
  cache.embed_mask.resize(0, 0);
  if (drop) {
    cache.embed_mask = dropout_mask<T>(x.rows(), x.cols(), cfg_.dropout, *rng);
    x.array() *= cache.embed_mask.array();
  }

  cache.layers.resize(p.layers.size());
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const auto& lp = p.layers[li];
    auto& lc = cache.layers[li];
    lc.attn_mask.resize(0, 0);
    lc.ff_mask.resize(0, 0);
    lc.h1 = layer_norm(x, lp.ln1_gain, lp.ln1_bias, lc.ln1);
    lc.q.noalias() = lc.h1 * lp.wq;
    lc.q.rowwise() += lp.bq;
    lc.k.noalias() = lc.h1 * lp.wk;
    lc.k.rowwise() += lp.bk;
    lc.v.noalias() = lc.h1 * lp.wv;
    lc.v.rowwise() += lp.bv;
    lc.ctx.resize(rows, d);
    lc.probs.resize(static_cast<std::size_t>(n * heads));
    for (Eigen::Index b = 0; b < n; ++b) {
      for (int h = 0; h < heads; ++h) {
        Matrix<T> s = (lc.q.block(b * L, h * dh, L, dh) * lc.k.block(b * L, h * dh, L, dh).transpose()) * scale;
        for (Eigen::Index j = 0; j < L; ++j) {
          if (!cache.key_valid[static_cast<std::size_t>(b * L + j)]) {
            s.col(j).setConstant(-std::numeric_limits<T>::infinity());
          }
        }
        softmax_rows(s);
        // The vectorized exp can leave denormals where -inf was expected.
        for (Eigen::Index j = 0; j < L; ++j) {
          if (!cache.key_valid[static_cast<std::size_t>(b * L + j)]) s.col(j).setZero();
        }
        lc.ctx.block(b * L, h * dh, L, dh).noalias() = s * lc.v.block(b * L, h * dh, L, dh);
        lc.probs[static_cast<std::size_t>(b * heads + h)] = std::move(s);
      }
    }
    Matrix<T> a(rows, d);
    a.noalias() = lc.ctx * lp.wo;
    a.rowwise() += lp.bo;
    if (drop) {
      lc.attn_mask = dropout_mask<T>(a.rows(), a.cols(), cfg_.dropout, *rng);
      a.array() *= lc.attn_mask.array();
    }
    x += a;

    lc.h2 = layer_norm(x, lp.ln2_gain, lp.ln2_bias, lc.ln2);
    lc.u.noalias() = lc.h2 * lp.w1;
    lc.u.rowwise() += lp.b1;
    lc.g = lc.u.unaryExpr([](T v) { return gelu(v); });
    Matrix<T> f(rows, d);
    f.noalias() = lc.g * lp.w2;
    f.rowwise() += lp.b2;
    if (drop) {
      lc.ff_mask = dropout_mask<T>(f.rows(), f.cols(), cfg_.dropout, *rng);
      f.array() *= lc.ff_mask.array();
    }
    x += f;
  }
  cache.hidden = layer_norm(x, p.final_gain, p.final_bias, cache.final_norm);
}

template <typename T>
Matrix<T> MaskedColorModel<T>::predict(const IdArray& ids, std::span<const int> positions) const {
  Cache cache;
  forward(std::span<const IdArray>(&ids, 1), cache, nullptr);
  Matrix<T> hidden(static_cast<Eigen::Index>(positions.size()), cfg_.d_model);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (positions[i] < 0 || positions[i] >= kSequenceLength) {
      throw Error(ErrorCode::invalid_argument, "prediction position out of range");
    }
    hidden.row(static_cast<Eigen::Index>(i)) = cache.hidden.row(positions[i]);
  }
  Matrix<T> logits = (hidden * params_.output_weight).rowwise() + params_.output_bias;
  softmax_rows(logits);
  return logits;
}

template <typename T>
Matrix<T> MaskedColorModel<T>::attention(const IdArray& ids, int layer, int head) const {
  if (layer < 0 || layer >= cfg_.n_layers || head < 0 || head >= cfg_.n_heads) {
    throw Error(ErrorCode::invalid_argument, "layer/head out of range");
  }
  Cache cache;
  forward(std::span<const IdArray>(&ids, 1), cache, nullptr);
  return cache.layers[static_cast<std::size_t>(layer)].probs[static_cast<std::size_t>(head)];
}

namespace {

constexpr std::size_t kChunk = 64;

// Rows of the stacked hidden states that carry targets, in batch order.
std::vector<Eigen::Index> target_rows(std::span<const EncodedExample> chunk) {
  std::vector<Eigen::Index> rows;
  for (std::size_t b = 0; b < chunk.size(); ++b) {
    if (chunk[b].positions.size() != chunk[b].targets.size()) {
      throw Error(ErrorCode::invalid_argument, "positions and targets misaligned");
    }
    for (int pos : chunk[b].positions) {
      if (pos < 0 || pos >= kSequenceLength) throw Error(ErrorCode::invalid_argument, "target position out of range");
      rows.push_back(static_cast<Eigen::Index>(b) * kSequenceLength + pos);
    }
  }
  return rows;
}

}  // namespace

template <typename T>
BatchLoss MaskedColorModel<T>::loss(std::span<const EncodedExample> batch) const {
  BatchLoss out;
  double total = 0.0;
  Cache cache;
  std::vector<IdArray> ids;
  for (std::size_t start = 0; start < batch.size(); start += kChunk) {
    const auto chunk = batch.subspan(start, std::min(kChunk, batch.size() - start));
    ids.clear();
    for (const auto& ex : chunk) ids.push_back(ex.ids);
    const auto rows = target_rows(chunk);
    if (rows.empty()) continue;
    forward(ids, cache, nullptr);
    Matrix<T> hidden(static_cast<Eigen::Index>(rows.size()), cfg_.d_model);
    for (std::size_t i = 0; i < rows.size(); ++i) hidden.row(static_cast<Eigen::Index>(i)) = cache.hidden.row(rows[i]);
    Matrix<T> logits = (hidden * params_.output_weight).rowwise() + params_.output_bias;
    std::size_t i = 0;
    for (const auto& ex : chunk) {
      for (std::size_t t = 0; t < ex.targets.size(); ++t, ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const auto target = static_cast<Eigen::Index>(ex.targets[t]);
        if (target < 0 || target >= logits.cols()) throw Error(ErrorCode::invalid_argument, "target out of range");
        const T mx = logits.row(row).maxCoeff();
        const double log_z = static_cast<double>(mx) +
                             std::log(static_cast<double>((logits.row(row).array() - mx).exp().sum()));
        total -= static_cast<double>(logits(row, target)) - log_z;
        Eigen::Index arg;
        logits.row(row).maxCoeff(&arg);
        out.correct += arg == target ? 1 : 0;
        ++out.targets;
      }
    }
  }
  out.loss = out.targets ? total / static_cast<double>(out.targets) : 0.0;
  return out;
}

template <typename T>
BatchLoss MaskedColorModel<T>::loss_and_gradients(std::span<const EncodedExample> batch,
                                                  ModelParams<T>& grads, Rng* dropout_rng) const {
  const auto rows_with_targets = target_rows(batch);
  BatchLoss out;
  const std::size_t total_targets = rows_with_targets.size();
  if (total_targets == 0) return out;
  const T inv_n = T(1) / static_cast<T>(total_targets);
  const int d = cfg_.d_model;
  const int heads = cfg_.n_heads;
  const int dh = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const auto& p = params_;
  constexpr Eigen::Index L = kSequenceLength;
  const auto n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index rows = n * L;

  std::vector<IdArray> ids;
  ids.reserve(batch.size());
  for (const auto& ex : batch) ids.push_back(ex.ids);
  Cache cache;
  forward(ids, cache, dropout_rng);

  const auto m = static_cast<Eigen::Index>(total_targets);
  Matrix<T> hidden(m, d);
  for (Eigen::Index i = 0; i < m; ++i) hidden.row(i) = cache.hidden.row(rows_with_targets[static_cast<std::size_t>(i)]);

  // Log-softmax cross-entropy head.
  Matrix<T> logits = (hidden * p.output_weight).rowwise() + p.output_bias;
  Matrix<T> dlogits(m, logits.cols());
  double total = 0.0;
  {
    Eigen::Index i = 0;
    for (const auto& ex : batch) {
      for (std::size_t t = 0; t < ex.targets.size(); ++t, ++i) {
        const auto target = static_cast<Eigen::Index>(ex.targets[t]);
        if (target < 0 || target >= logits.cols()) throw Error(ErrorCode::invalid_argument, "target out of range");
        const T mx = logits.row(i).maxCoeff();
        const auto shifted = (logits.row(i).array() - mx).eval();
        const T log_z = std::log(shifted.exp().sum());
        total -= static_cast<double>(shifted(target) - log_z);
        Eigen::Index arg;
        logits.row(i).maxCoeff(&arg);
        out.correct += arg == target ? 1 : 0;
        dlogits.row(i) = (shifted - log_z).exp().matrix() * inv_n;
        dlogits(i, target) -= inv_n;
      }
    }
  }
  grads.output_weight.noalias() += hidden.transpose() * dlogits;
  grads.output_bias += dlogits.colwise().sum();
  const Matrix<T> dhidden_rows = dlogits * p.output_weight.transpose();
  Matrix<T> dhidden = Matrix<T>::Zero(rows, d);
  for (Eigen::Index i = 0; i < m; ++i) dhidden.row(rows_with_targets[static_cast<std::size_t>(i)]) += dhidden_rows.row(i);

  Matrix<T> dx = layer_norm_backward(dhidden, p.final_gain, cache.final_norm, grads.final_gain, grads.final_bias);

  Matrix<T> du, dctx, dq(rows, d), dk(rows, d), dv(rows, d), dh1, ds(L, L), dprobs(L, L);
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const auto& lp = p.layers[li];
    const auto& lc = cache.layers[li];
    auto& lg = grads.layers[li];

    // Feed-forward branch.
    const Matrix<T> df = lc.ff_mask.size() ? Matrix<T>(dx.cwiseProduct(lc.ff_mask)) : dx;
    lg.w2.noalias() += lc.g.transpose() * df;
    lg.b2 += df.colwise().sum();
    du.noalias() = df * lp.w2.transpose();
    du.array() *= lc.u.unaryExpr([](T v) { return gelu_grad(v); }).array();
    lg.w1.noalias() += lc.h2.transpose() * du;
    lg.b1 += du.colwise().sum();
    const Matrix<T> dh2 = du * lp.w1.transpose();
    dx += layer_norm_backward(dh2, lp.ln2_gain, lc.ln2, lg.ln2_gain, lg.ln2_bias);

    // Attention branch.
    const Matrix<T> da = lc.attn_mask.size() ? Matrix<T>(dx.cwiseProduct(lc.attn_mask)) : dx;
    lg.wo.noalias() += lc.ctx.transpose() * da;
    lg.bo += da.colwise().sum();
    dctx.noalias() = da * lp.wo.transpose();
    for (Eigen::Index b = 0; b < n; ++b) {
      for (int h = 0; h < heads; ++h) {
        const auto& probs = lc.probs[static_cast<std::size_t>(b * heads + h)];
        const auto dctx_h = dctx.block(b * L, h * dh, L, dh);
        dv.block(b * L, h * dh, L, dh).noalias() = probs.transpose() * dctx_h;
        dprobs.noalias() = dctx_h * lc.v.block(b * L, h * dh, L, dh).transpose();
        for (Eigen::Index r = 0; r < L; ++r) {
          const T dot = dprobs.row(r).dot(probs.row(r));
          ds.row(r) = probs.row(r).cwiseProduct((dprobs.row(r).array() - dot).matrix());
        }
        dq.block(b * L, h * dh, L, dh).noalias() = (ds * lc.k.block(b * L, h * dh, L, dh)) * scale;
        dk.block(b * L, h * dh, L, dh).noalias() = (ds.transpose() * lc.q.block(b * L, h * dh, L, dh)) * scale;
      }
    }
    lg.wq.noalias() += lc.h1.transpose() * dq;
    lg.wk.noalias() += lc.h1.transpose() * dk;
    lg.wv.noalias() += lc.h1.transpose() * dv;
    lg.bq += dq.colwise().sum();
    lg.bk += dk.colwise().sum();
    lg.bv += dv.colwise().sum();
    dh1.noalias() = dq * lp.wq.transpose();
    dh1.noalias() += dk * lp.wk.transpose();
    dh1.noalias() += dv * lp.wv.transpose();
    dx += layer_norm_backward(dh1, lp.ln1_gain, lc.ln1, lg.ln1_gain, lg.ln1_bias);
  }

  if (cache.embed_mask.size()) dx.array() *= cache.embed_mask.array();
  for (Eigen::Index b = 0; b < n; ++b) {
    const auto& seq_ids = ids[static_cast<std::size_t>(b)];
    for (int pos = 0; pos < kSequenceLength; ++pos) {
      const Eigen::Index r = b * L + pos;
      grads.token_embedding.row(seq_ids[pos]) += dx.row(r);
      if (cfg_.use_segment_embeddings) grads.segment_embedding.row(segment_of(pos)) += dx.row(r);
      if (cfg_.use_position_embeddings) grads.position_embedding.row(pos) += dx.row(r);
    }
  }
  out.targets = total_targets;
  out.loss = total / static_cast<double>(total_targets);
  return out;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template class MaskedColorModel<float>;
template class MaskedColorModel<double>;

}  // namespace colorrec
