#include <gtest/gtest.h>

#include "colorrec/error.hpp"
#include "colorrec/palette.hpp"
#include "colorrec/recolor.hpp"
#include "oracles.hpp"

using namespace colorrec;

namespace {

Element element(std::string id, ElementKind kind, std::vector<RgbColor> colors) {
  Element e;
  e.id = std::move(id);
  e.kind = kind;
  e.width = 10;
  e.height = 10;
  e.colors = std::move(colors);
  return e;
}

GraphicDocument vector_doc() {
  GraphicDocument doc;
  doc.width = 40;
  doc.height = 40;
  doc.elements.push_back(element("bg", ElementKind::colored_background, {{240, 240, 240}}));
  doc.elements.push_back(element("a", ElementKind::svg, {{200, 40, 40}, {205, 45, 40}, {20, 20, 200}}));
  doc.elements.push_back(element("t", ElementKind::text, {{200, 40, 40}}));
  Element img = element("img", ElementKind::image, {});
  img.raster = RasterImage(4, 4, RgbColor{90, 160, 30});
  doc.elements.push_back(img);
  return doc;
}

int max_channel_diff(RgbColor x, RgbColor y) {
  return std::max({std::abs(x.r - y.r), std::abs(x.g - y.g), std::abs(x.b - y.b)});
}

}  // namespace

TEST(RecolorVector, SourceEqualsTargetIsExactNoOp) {
  const GraphicDocument doc = vector_doc();
  for (const auto& c : {RgbColor{200, 40, 40}, RgbColor{240, 240, 240}, RgbColor{1, 2, 3}}) {
    const LabColor lab = srgb_to_lab(c);
    EXPECT_EQ(recolor_vector(doc, Group::svg, lab, lab), doc);
    EXPECT_EQ(recolor_vector(doc, Group::text, lab, lab), doc);
  }
}

TEST(RecolorVector, FalloffFollowsDistanceToSource) {
  const GraphicDocument doc = vector_doc();
  const LabColor source = srgb_to_lab({200, 40, 40});
  const LabColor target = srgb_to_lab({40, 160, 60});
  const GraphicDocument out = recolor_vector(doc, Group::svg, source, target);
  const auto& fills = out.elements[1].colors;
  // Exact match lands on the target.
  EXPECT_EQ(fills[0], lab_to_srgb(target));
  // A near color moves by w = 1 - dE / tau with an independently computed dE.
  const LabColor near = srgb_to_lab({205, 45, 40});
  const double de = oracle::ciede2000({near.l, near.a, near.b}, {source.l, source.a, source.b});
  ASSERT_LT(de, 20.0);
  const double w = 1.0 - de / 20.0;
  const RgbColor expected = lab_to_srgb({near.l + w * (target.l - source.l), near.a + w * (target.a - source.a),
                                         near.b + w * (target.b - source.b)});
  EXPECT_LE(max_channel_diff(fills[1], expected), 1);
  // Far colors and other groups are bitwise unchanged.
  EXPECT_EQ(fills[2], (RgbColor{20, 20, 200}));
  EXPECT_EQ(out.elements[0], doc.elements[0]);
  EXPECT_EQ(out.elements[2], doc.elements[2]);
  EXPECT_EQ(out.elements[3], doc.elements[3]);
}

TEST(RecolorVector, TauControlsReach) {
  const GraphicDocument doc = vector_doc();
  const LabColor source = srgb_to_lab({200, 40, 40});
  const LabColor target = srgb_to_lab({0, 0, 0});
  RecolorOptions tight;
  tight.tau = 0.5;
  const GraphicDocument out = recolor_vector(doc, Group::svg, source, target, tight);
  EXPECT_EQ(out.elements[1].colors[1], doc.elements[1].colors[1]);
  EXPECT_THROW(recolor_vector(doc, Group::image, source, target), Error);
}

TEST(RecolorImage, IdentityEditKeepsPixels) {
  RasterImage img(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      img.at(x, y) = {static_cast<std::uint8_t>(x * 16), static_cast<std::uint8_t>(y * 16), 128};
    }
  }
  PixelMultiset px;
  for (const auto& p : img.pixels()) px.add(p);
  const Palette palette = palette_from_pixels(px, 1);
  for (std::size_t i = 0; i < palette.size(); ++i) {
    const PaletteEdit edit{i, palette.colors[i]};
    const RasterImage out = recolor_image(img, palette, std::span<const PaletteEdit>(&edit, 1));
    EXPECT_EQ(out, img);
  }
}

TEST(RecolorImage, CentroidPixelsMoveToTarget) {
  Palette palette;
  palette.colors = {srgb_to_lab({200, 0, 0}), srgb_to_lab({0, 0, 200})};
  palette.weights = {0.5, 0.5};
  RasterImage img(2, 1);
  img.at(0, 0) = {200, 0, 0};
  img.at(1, 0) = {0, 0, 200};
  const LabColor target = srgb_to_lab({0, 180, 0});
  const PaletteEdit edit{0, target};
  const RasterImage out = recolor_image(img, palette, std::span<const PaletteEdit>(&edit, 1));
  EXPECT_LE(max_channel_diff(out.at(0, 0), {0, 180, 0}), 1);
  // The other centroid has zero offset, so its exact pixels stay put.
  EXPECT_EQ(out.at(1, 0), (RgbColor{0, 0, 200}));
  const PaletteEdit bad{2, target};
  EXPECT_THROW(recolor_image(img, palette, std::span<const PaletteEdit>(&bad, 1)), Error);
}

TEST(ApplyColor, TouchesOnlyTheChosenGroup) {
  const GraphicDocument doc = vector_doc();
  const MultiPalette mp = extract_multi_palette(doc, 0);
  const SlotRef image_slot{Group::image, 0};
  const GraphicDocument out = apply_color(doc, mp, image_slot, srgb_to_lab({250, 250, 0}));
  EXPECT_LE(max_channel_diff(out.elements[3].raster->at(0, 0), {250, 250, 0}), 1);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out.elements[i], doc.elements[i]);

  const SlotRef text_slot{Group::text, 0};
  const GraphicDocument same = apply_color(doc, mp, text_slot, mp[Group::text].colors[0]);
  EXPECT_EQ(same, doc);
  EXPECT_THROW(apply_color(doc, mp, SlotRef{Group::text, 1}, {}), Error);
}

TEST(ApplyColor, RecommendationRankIsChecked) {
  const GraphicDocument doc = vector_doc();
  const MultiPalette mp = extract_multi_palette(doc, 0);
  Recommendation rec;
  rec.slot = {Group::text, 0};
  rec.source = mp[Group::text].colors[0];
  rec.candidates.push_back({{0, 8, 8}, display_color({0, 8, 8}), 0.9, 1});
  const GraphicDocument out = apply_recommendation(doc, mp, rec, 1);
  EXPECT_EQ(out.elements[2].colors[0], display_color({0, 8, 8}));
  EXPECT_THROW(apply_recommendation(doc, mp, rec, 2), Error);
  EXPECT_THROW(apply_recommendation(doc, mp, rec, 0), Error);
}
