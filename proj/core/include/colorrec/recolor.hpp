#pragma once

#include <span>
#include <vector>

#include "colorrec/document.hpp"
#include "colorrec/palette.hpp"
#include "colorrec/recommend.hpp"

namespace colorrec {

struct RecolorOptions {
  double tau = 20.0;          // CIEDE2000 radius of the vector falloff
  double idw_exponent = 4.0;  // inverse-distance exponent for rasters
};

// Moves every fill c of the group's elements by w * (target - source) in
// LAB with w = max(0, 1 - dE00(c, source) / tau). Exact matches become the
// target; fills with w == 0 are left bit-identical.
GraphicDocument recolor_vector(const GraphicDocument& doc, Group group, const LabColor& source,
                               const LabColor& target, const RecolorOptions& opts = {});

struct PaletteEdit {
  std::size_t index = 0;  // centroid index in the palette
  LabColor target;
};

// Shifts each pixel by the inverse-distance-weighted sum of edited centroid
// offsets. Pixels equal to a centroid take that centroid's offset only.
// Throws Error(invalid_slot) for an index outside the palette.
RasterImage recolor_image(const RasterImage& image, const Palette& palette,
                          std::span<const PaletteEdit> edits, const RecolorOptions& opts = {});

// LAB target used when a code is applied: the code's display swatch.
LabColor target_lab(const ColorCode& code, const VocabConfig& cfg = {});

// Recolors one palette slot to `target`: vector groups through
// recolor_vector, the image group through recolor_image on every raster.
GraphicDocument apply_color(const GraphicDocument& doc, const MultiPalette& palettes,
                            const SlotRef& slot, const LabColor& target,
                            const RecolorOptions& opts = {});

// Applies candidate `rank` (1-based) of a recommendation.
GraphicDocument apply_recommendation(const GraphicDocument& doc, const MultiPalette& palettes,
                                     const Recommendation& rec, int rank,
                                     const RecolorOptions& opts = {});

}  // namespace colorrec
