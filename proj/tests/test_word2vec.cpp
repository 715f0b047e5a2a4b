#include <gtest/gtest.h>

#include <cmath>

#include "colorrec/word2vec.hpp"
#include "shared_model.hpp"

using namespace colorrec;

TEST(SkipGram, EmbeddingsAreFiniteAndDistinct) {
  const auto& world = fixture::small_world();
  const auto train = sequences_of(world.corpus.train);
  const SkipGramBaseline model(train, world.vocab);
  const auto& emb = model.embeddings();
  ASSERT_EQ(emb.size(), world.vocab.num_colors() * static_cast<std::size_t>(model.dim()));
  for (float v : emb) ASSERT_TRUE(std::isfinite(v));
  // Not collapsed onto a single direction.
  const auto row = [&](std::size_t i) { return &emb[i * static_cast<std::size_t>(model.dim())]; };
  double max_diff = 0.0;
  for (int k = 0; k < model.dim(); ++k) max_diff = std::max(max_diff, std::abs(double(row(0)[k]) - row(1)[k]));
  EXPECT_GT(max_diff, 1e-3);
}

TEST(SkipGram, ScoresAreADistributionAndSeeded) {
  const auto& world = fixture::small_world();
  const auto train = sequences_of(world.corpus.train);
  SkipGramOptions opts;
  opts.epochs = 3;
  const SkipGramBaseline a(train, world.vocab, opts), b(train, world.vocab, opts);
  EXPECT_EQ(a.embeddings(), b.embeddings());
  const ColorSequence& seq = world.corpus.test[0].sequence;
  const std::vector<int> at{seq.color_positions()[0]};
  const auto s = a.scores(seq, at);
  double total = 0.0;
  for (double v : s) {
    EXPECT_GE(v, 0.0);
    total += v;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  const auto top = a.predict_topn(seq, at, 4);
  ASSERT_EQ(top[0].size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_GE(top[0][i - 1].probability, top[0][i].probability);
}
