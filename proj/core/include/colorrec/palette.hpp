#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "colorrec/color.hpp"
#include "colorrec/document.hpp"

namespace colorrec {

inline constexpr std::size_t kMaxPaletteColors = 5;

struct WeightedLab {
  LabColor color;
  double weight = 1.0;
};

struct KMeansOptions {
  int restarts = 8;
  int max_iterations = 100;
  double tolerance = 1e-6;  // max centroid shift, LAB units
};

struct KMeansResult {
  std::vector<LabColor> centroids;  // descending weight
  std::vector<double> weights;      // fraction of total point weight
  // Cluster of each input point, indexing `centroids`.
  std::vector<std::size_t> assignment;
  double inertia = 0.0;  // weighted sum of squared LAB distances
  // Inertia observed at each assignment step of the winning restart.
  std::vector<double> inertia_history;
  int iterations = 0;
};

// k-means++ seeding, Lloyd iterations, best of `restarts` by inertia.
// k is reduced to the number of distinct points when larger. Throws on
// empty input or k < 1.
KMeansResult kmeans_lab(std::span<const LabColor> points, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& opts = {});
KMeansResult kmeans_weighted(std::span<const WeightedLab> points, std::size_t k,
                             std::uint64_t seed, const KMeansOptions& opts = {});

double kmeans_inertia(std::span<const WeightedLab> points, std::span<const LabColor> centroids);

struct Palette {
  std::vector<LabColor> colors;  // at most kMaxPaletteColors, descending weight
  std::vector<double> weights;

  std::size_t size() const { return colors.size(); }
  bool empty() const { return colors.empty(); }
  friend bool operator==(const Palette&, const Palette&) = default;
};

struct MultiPalette {
  std::array<Palette, 3> groups;  // image, svg, text

  Palette& operator[](Group g) { return groups[static_cast<std::size_t>(g)]; }
  const Palette& operator[](Group g) const { return groups[static_cast<std::size_t>(g)]; }
  friend bool operator==(const MultiPalette&, const MultiPalette&) = default;
};

struct PaletteOptions {
  std::size_t max_colors = kMaxPaletteColors;
  // Upper bound on distinct colors fed to k-means per group; larger sets are
  // thinned with a uniform stride over the sorted color list.
  std::size_t max_points = 65536;
  KMeansOptions kmeans;
};

Palette palette_from_pixels(const PixelMultiset& pixels, std::uint64_t seed,
                            const PaletteOptions& opts = {});

MultiPalette extract_multi_palette(const GraphicDocument& doc, std::uint64_t seed,
                                   const PaletteOptions& opts = {});

}  // namespace colorrec
