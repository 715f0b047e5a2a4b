#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "colorrec/error.hpp"
#include "colorrec/model.hpp"
#include "fixtures.hpp"

using namespace colorrec;

namespace {

ModelConfig tiny_config(int vocab) {
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_layers = 1;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.vocab_size = vocab;
  cfg.dropout = 0.0;
  cfg.init_std = 0.5;
  cfg.seed = 3;
  return cfg;
}

// Moves layer norm gains and biases away from 1 and 0 so their gradients are
// exercised in a generic regime.
void jitter(ModelParams<double>& p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 0.3);
  for (auto& t : p.tensors()) {
    for (double& v : t.values()) v += nd(gen);
  }
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

}  // namespace

TEST(Model, GradientsMatchCentralDifferences) {
  const Vocabulary vocab = fixture::line_vocab(7);
  for (bool positions : {false, true}) {
    ModelConfig cfg = tiny_config(7);
    cfg.use_position_embeddings = positions;
    MaskedColorModel<double> model(cfg);
    jitter(model.params(), 11);
    const auto batch = fixture::random_examples(5, vocab, 4);

    ModelParams<double> grads = ModelParams<double>::zeros(cfg);
    model.loss_and_gradients(batch, grads, nullptr);

    auto tensors = model.params().tensors();
    const auto gtensors = grads.tensors();
    ASSERT_EQ(tensors.size(), gtensors.size());
    std::mt19937_64 gen(99);
    const double h = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      // Round-robin over tensors so every parameter kind gets sampled.
      const std::size_t t = static_cast<std::size_t>(i) % tensors.size();
      const std::size_t j = gen() % tensors[t].size();
      double& w = tensors[t].data[j];
      const double saved = w;
      w = saved + h;
      const double up = model.loss(batch).loss;
      w = saved - h;
      const double down = model.loss(batch).loss;
      w = saved;
      const double numeric = (up - down) / (2 * h);
      const double err = relative_error(gtensors[t].data[j], numeric);
      worst = std::max(worst, err);
      EXPECT_LT(err, 1e-3) << tensors[t].name << "[" << j << "] analytic " << gtensors[t].data[j]
                           << " numeric " << numeric;
    }
    EXPECT_LT(worst, 1e-3);
  }
}

TEST(Model, UnusedPositionTableHasNoGradient) {
  const Vocabulary vocab = fixture::line_vocab(5);
  const ModelConfig cfg = tiny_config(5);
  MaskedColorModel<double> model(cfg);
  EXPECT_EQ(model.params().position_embedding.size(), 0);
  ModelParams<double> grads = ModelParams<double>::zeros(cfg);
  model.loss_and_gradients(fixture::random_examples(1, vocab, 3), grads, nullptr);
  EXPECT_EQ(grads.position_embedding.size(), 0);
  for (const auto& t : grads.tensors()) EXPECT_NE(t.name.find("position"), 0u) << t.name;
}

TEST(Model, GradientsAreDeterministicWithoutDropout) {
  const Vocabulary vocab = fixture::line_vocab(6);
  ModelConfig cfg = tiny_config(6);
  cfg.dropout = 0.2;
  MaskedColorModel<double> model(cfg);
  const auto batch = fixture::random_examples(2, vocab, 5);
  ModelParams<double> a = ModelParams<double>::zeros(cfg), b = ModelParams<double>::zeros(cfg);
  const double la = model.loss_and_gradients(batch, a, nullptr).loss;
  const double lb = model.loss_and_gradients(batch, b, nullptr).loss;
  EXPECT_EQ(la, lb);
  const auto ta = a.tensors(), tb = b.tensors();
  for (std::size_t i = 0; i < ta.size(); ++i) {
    EXPECT_TRUE(std::equal(ta[i].values().begin(), ta[i].values().end(), tb[i].values().begin())) << ta[i].name;
  }
  // The dropout-free gradient pass also agrees with the plain loss.
  EXPECT_DOUBLE_EQ(model.loss(batch).loss, la);
}

TEST(Model, DropoutChangesTrainingLossOnly) {
  const Vocabulary vocab = fixture::line_vocab(6);
  ModelConfig cfg = tiny_config(6);
  cfg.dropout = 0.5;
  MaskedColorModel<double> model(cfg);
  const auto batch = fixture::random_examples(2, vocab, 5);
  ModelParams<double> g = ModelParams<double>::zeros(cfg);
  Rng rng(1);
  const double noisy = model.loss_and_gradients(batch, g, &rng).loss;
  EXPECT_NE(noisy, model.loss(batch).loss);
}

TEST(Model, PredictionsAreDistributions) {
  const Vocabulary vocab = fixture::line_vocab(9);
  ModelConfig cfg = tiny_config(9);
  MaskedColorModel<float> model(cfg);
  const auto ex = fixture::random_examples(4, vocab, 1)[0];
  const std::vector<int> at{0, 6, 12};
  const Matrix<float> probs = model.predict(ex.ids, at);
  ASSERT_EQ(probs.rows(), 3);
  ASSERT_EQ(probs.cols(), 9);
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    EXPECT_NEAR(probs.row(r).sum(), 1.0f, 1e-5f);
    EXPECT_GE(probs.row(r).minCoeff(), 0.0f);
  }
  const std::vector<int> bad{18};
  EXPECT_THROW(model.predict(ex.ids, bad), Error);
}

TEST(Model, AttentionIgnoresPaddingKeys) {
  const Vocabulary vocab = fixture::line_vocab(4);
  ModelConfig cfg = tiny_config(4);
  cfg.n_layers = 2;
  MaskedColorModel<double> model(cfg);
  const ColorSequence seq = encode_code_palettes({std::vector<ColorCode>{{1, 0, 0}}, std::vector<ColorCode>{{2, 0, 0}, {3, 0, 0}}, {}});
  const IdArray ids = encode_tokens(seq, vocab);
  for (int layer = 0; layer < 2; ++layer) {
    for (int head = 0; head < 2; ++head) {
      const Matrix<double> a = model.attention(ids, layer, head);
      ASSERT_EQ(a.rows(), kSequenceLength);
      ASSERT_EQ(a.cols(), kSequenceLength);
      for (int r = 0; r < kSequenceLength; ++r) {
        EXPECT_NEAR(a.row(r).sum(), 1.0, 1e-12);
        for (int c = 0; c < kSequenceLength; ++c) {
          if (ids[static_cast<std::size_t>(c)] == kPadId) EXPECT_EQ(a(r, c), 0.0);
        }
      }
    }
  }
  EXPECT_THROW(model.attention(ids, 2, 0), Error);
  EXPECT_THROW(model.attention(ids, 0, 2), Error);
}

TEST(Model, OrderInvariantWithoutSegmentsOrPositions) {
  const Vocabulary vocab = fixture::line_vocab(8);
  ModelConfig cfg = tiny_config(8);
  cfg.use_segment_embeddings = false;
  MaskedColorModel<double> model(cfg);
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 20; ++trial) {
    const ColorSequence seq = fixture::random_sequence(gen, vocab);
    IdArray ids = encode_tokens(seq, vocab);
    const auto cp = seq.color_positions();
    const int target = cp[gen() % cp.size()];
    ids[static_cast<std::size_t>(target)] = kMaskId;
    const std::vector<int> at{target};
    const Matrix<double> base = model.predict(ids, at);

    // Shuffle the other color tokens over all color and padding slots.
    std::vector<int> slots;
    std::vector<TokenId> others;
    for (int p = 0; p < kSequenceLength; ++p) {
      if (is_sep_position(p) || p == target) continue;
      slots.push_back(p);
      if (ids[static_cast<std::size_t>(p)] != kPadId) others.push_back(ids[static_cast<std::size_t>(p)]);
    }
    others.resize(slots.size(), kPadId);
    std::shuffle(others.begin(), others.end(), gen);
    IdArray moved = ids;
    for (std::size_t i = 0; i < slots.size(); ++i) moved[static_cast<std::size_t>(slots[i])] = others[i];
    EXPECT_LT((model.predict(moved, at) - base).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Model, SegmentsBreakOrderInvariance) {
  const Vocabulary vocab = fixture::line_vocab(8);
  MaskedColorModel<double> model(tiny_config(8));
  const ColorSequence a = encode_code_palettes({std::vector<ColorCode>{{1, 0, 0}}, std::vector<ColorCode>{{2, 0, 0}},
                                                std::vector<ColorCode>{{3, 0, 0}, {4, 0, 0}}});
  const ColorSequence b = encode_code_palettes({std::vector<ColorCode>{{1, 0, 0}}, std::vector<ColorCode>{{3, 0, 0}},
                                                std::vector<ColorCode>{{2, 0, 0}, {4, 0, 0}}});
  IdArray ia = encode_tokens(a, vocab), ib = encode_tokens(b, vocab);
  ia[0] = ib[0] = kMaskId;
  const std::vector<int> at{0};
  EXPECT_GT((model.predict(ia, at) - model.predict(ib, at)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Model, InitializationIsSeeded) {
  ModelConfig cfg = tiny_config(5);
  const auto a = ModelParams<float>::initialized(cfg);
  const auto b = ModelParams<float>::initialized(cfg);
  cfg.seed = 4;
  const auto c = ModelParams<float>::initialized(cfg);
  EXPECT_EQ(a.token_embedding, b.token_embedding);
  EXPECT_NE(a.token_embedding, c.token_embedding);
  EXPECT_EQ(a.parameter_count(), c.parameter_count());
}

TEST(Model, RejectsBadConfigs) {
  ModelConfig cfg = tiny_config(5);
  cfg.n_heads = 3;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = tiny_config(0);
  EXPECT_THROW(MaskedColorModel<float>{cfg}, Error);
  cfg = tiny_config(5);
  cfg.dropout = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
}
