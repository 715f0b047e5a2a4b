#include <gtest/gtest.h>

#include <random>

#include "colorrec/error.hpp"
#include "colorrec/palette.hpp"
#include "oracles.hpp"

using namespace colorrec;

namespace {

std::vector<WeightedLab> random_points(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> l(0, 100), ab(-60, 60), w(0.5, 3.0);
  std::vector<WeightedLab> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({{l(gen), ab(gen), ab(gen)}, w(gen)});
  return pts;
}

}  // namespace

TEST(KMeans, NeverBeatsExhaustiveOptimum) {
  std::mt19937_64 gen(2024);
  int hits = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 4 + t % 5;
    const std::size_t k = 1 + t % 3;
    const auto pts = random_points(gen, n);
    std::vector<oracle::Lab> op;
    std::vector<double> ow;
    for (const auto& p : pts) {
      op.push_back({p.color.l, p.color.a, p.color.b});
      ow.push_back(p.weight);
    }
    const double best = oracle::optimal_partition_inertia(op, ow, k);
    const KMeansResult r = kmeans_weighted(pts, k, static_cast<std::uint64_t>(t));
    EXPECT_GE(r.inertia, best - 1e-9);
    EXPECT_NEAR(r.inertia, kmeans_inertia(pts, r.centroids), 1e-9);
    if (r.inertia <= best + 1e-9) ++hits;
  }
  EXPECT_GE(hits, 90);
}

TEST(KMeans, InertiaNonIncreasingAcrossIterations) {
  std::mt19937_64 gen(9);
  for (int t = 0; t < 20; ++t) {
    const auto pts = random_points(gen, 200);
    const KMeansResult r = kmeans_weighted(pts, 5, static_cast<std::uint64_t>(t));
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      EXPECT_LE(r.inertia_history[i], r.inertia_history[i - 1] + 1e-9);
    }
  }
}

TEST(KMeans, WeightsSortedAndNormalized) {
  std::mt19937_64 gen(1);
  const auto pts = random_points(gen, 50);
  const KMeansResult r = kmeans_weighted(pts, 4, 3);
  ASSERT_EQ(r.centroids.size(), 4u);
  double sum = 0;
  for (std::size_t i = 0; i < r.weights.size(); ++i) {
    sum += r.weights[i];
    if (i > 0) EXPECT_GE(r.weights[i - 1], r.weights[i]);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
  ASSERT_EQ(r.assignment.size(), pts.size());
}

TEST(KMeans, DeterministicPerSeed) {
  std::mt19937_64 gen(4);
  const auto pts = random_points(gen, 80);
  const auto a = kmeans_weighted(pts, 3, 17);
  const auto b = kmeans_weighted(pts, 3, 17);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.assignment, b.assignment);
}

TEST(KMeans, ReducesKToDistinctPointsAndRejectsBadInput) {
  const std::vector<LabColor> two{{10, 0, 0}, {10, 0, 0}, {80, 5, 5}};
  const KMeansResult r = kmeans_lab(two, 5, 0);
  EXPECT_EQ(r.centroids.size(), 2u);
  EXPECT_NEAR(r.inertia, 0.0, 1e-12);
  EXPECT_THROW(kmeans_lab(std::span<const LabColor>{}, 2, 0), Error);
  EXPECT_THROW(kmeans_lab(two, 0, 0), Error);
}

TEST(Palette, RecoversWellSeparatedColors) {
  // Five flat colors with small per-pixel noise.
  const RgbColor truth[5] = {{220, 30, 40}, {30, 160, 60}, {40, 60, 200}, {240, 220, 50}, {20, 20, 20}};
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<int> noise(-3, 3);
  PixelMultiset px;
  for (int c = 0; c < 5; ++c) {
    for (int i = 0; i < 400 * (5 - c); ++i) {
      const auto j = [&](int v) { return static_cast<std::uint8_t>(std::clamp(v + noise(gen), 0, 255)); };
      px.add({j(truth[c].r), j(truth[c].g), j(truth[c].b)});
    }
  }
  const Palette p = palette_from_pixels(px, 5);
  ASSERT_EQ(p.size(), 5u);
  for (int c = 0; c < 5; ++c) {
    // Sorted by weight, which follows the construction order.
    EXPECT_LE(ciede2000(p.colors[static_cast<std::size_t>(c)], srgb_to_lab(truth[c])), 2.0) << c;
  }
}

TEST(Palette, EmptyGroupGivesEmptyPalette) {
  EXPECT_TRUE(palette_from_pixels(PixelMultiset{}, 0).empty());
}

TEST(Palette, SmallDistinctSetIsExact) {
  PixelMultiset px;
  px.add({255, 0, 0}, 30);
  px.add({0, 0, 255}, 10);
  const Palette p = palette_from_pixels(px, 0);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(lab_to_srgb(p.colors[0]), (RgbColor{255, 0, 0}));
  EXPECT_NEAR(p.weights[0], 0.75, 1e-12);
}
