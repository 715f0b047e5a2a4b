#include <gtest/gtest.h>

#include "colorrec/error.hpp"
#include "colorrec/recommend.hpp"
#include "shared_model.hpp"

using namespace colorrec;

TEST(SlotRef, ParseAndFormat) {
  EXPECT_EQ(parse_slot("svg:0"), (SlotRef{Group::svg, 0}));
  EXPECT_EQ(parse_slot("image:4"), (SlotRef{Group::image, 4}));
  EXPECT_FALSE(parse_slot("svg"));
  EXPECT_FALSE(parse_slot("logo:1"));
  EXPECT_FALSE(parse_slot("text:x"));
  EXPECT_EQ(to_string(SlotRef{Group::text, 2}), "text:2");
  EXPECT_EQ((SlotRef{Group::text, 2}).position(), 14);
}

TEST(Recommend, RanksCandidatesForTestDocuments) {
  const auto& world = fixture::small_world();
  const GraphicDocument& doc = world.corpus.test_documents[0];
  const SlotRef slot{Group::svg, 0};
  const auto recs = recommend(doc, std::span<const SlotRef>(&slot, 1), 3, *world.model);
  ASSERT_EQ(recs.size(), 1u);
  const auto& r = recs[0];
  EXPECT_EQ(r.slot, slot);
  ASSERT_EQ(r.candidates.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    const auto& c = r.candidates[static_cast<std::size_t>(i)];
    EXPECT_EQ(c.rank, i + 1);
    EXPECT_EQ(c.display, display_color(c.code));
    EXPECT_TRUE(world.vocab.contains(c.code));
    if (i > 0) EXPECT_LE(c.probability, r.candidates[static_cast<std::size_t>(i - 1)].probability);
  }
  // The source is the current palette color of that slot.
  const MultiPalette mp = extract_multi_palette(doc, 0);
  EXPECT_EQ(r.source, mp[Group::svg].colors[0]);
  // A trained model recovers the original slot most of the time.
  int hits = 0;
  for (std::size_t i = 0; i < world.corpus.test.size(); ++i) {
    const auto top = recommend(world.corpus.test_documents[i], std::span<const SlotRef>(&slot, 1), 1, *world.model);
    hits += top[0].candidates[0].code == world.corpus.test[i].sequence.tokens[6].code;
  }
  EXPECT_GE(hits, static_cast<int>(world.corpus.test.size() * 3 / 4));
}

TEST(Recommend, ExclusionAndIterativeMode) {
  const auto& world = fixture::small_world();
  const GraphicDocument& doc = world.corpus.test_documents[1];
  const SlotRef slot{Group::svg, 0};
  const auto base = recommend(doc, std::span<const SlotRef>(&slot, 1), 2, *world.model)[0];
  const std::set<ColorCode> exclude{base.candidates[0].code};
  const auto without = recommend_excluding(doc, slot, 2, exclude, *world.model);
  EXPECT_EQ(without.candidates[0].code, base.candidates[1].code);
  EXPECT_EQ(without.candidates[0].rank, 1);

  const std::set<ColorCode> everything(world.vocab.codes().begin(), world.vocab.codes().end());
  EXPECT_THROW(recommend_excluding(doc, slot, 2, everything, *world.model), Error);

  const MultiPalette mp = extract_multi_palette(doc, 0);
  std::vector<SlotRef> slots{{Group::svg, 0}, {Group::text, 0}};
  RecommendOptions iterative;
  iterative.iterative = true;
  const auto joint = recommend_for_palettes(mp, slots, 3, *world.model);
  const auto step = recommend_for_palettes(mp, slots, 3, *world.model, iterative);
  ASSERT_EQ(joint.size(), 2u);
  ASSERT_EQ(step.size(), 2u);
  // The first slot sees the same context either way.
  EXPECT_EQ(joint[0].candidates[0].code, step[0].candidates[0].code);
}

TEST(Recommend, RejectsBadSlots) {
  const auto& world = fixture::small_world();
  const GraphicDocument& doc = world.corpus.test_documents[0];
  const MultiPalette mp = extract_multi_palette(doc, 0);
  const auto rejects = [&](std::vector<SlotRef> slots) {
    try {
      recommend_for_palettes(mp, slots, 3, *world.model);
    } catch (const Error& e) {
      return e.code() == ErrorCode::invalid_slot;
    }
    return false;
  };
  EXPECT_TRUE(rejects({}));
  EXPECT_TRUE(rejects({{Group::svg, 0}, {Group::svg, 0}}));
  EXPECT_TRUE(rejects({{Group::svg, 5}}));
  EXPECT_TRUE(rejects({{Group::svg, static_cast<int>(mp[Group::svg].size())}}));
  const SlotRef ok{Group::svg, 0};
  EXPECT_THROW(recommend_for_palettes(mp, std::span<const SlotRef>(&ok, 1), 0, *world.model), Error);
}
