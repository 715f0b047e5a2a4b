#include "colorrec/recolor.hpp"

#include <cmath>
#include <unordered_map>

#include "colorrec/error.hpp"

namespace colorrec {

GraphicDocument recolor_vector(const GraphicDocument& doc, Group group, const LabColor& source,
                               const LabColor& target, const RecolorOptions& opts) {
  if (group == Group::image) {
    throw Error(ErrorCode::invalid_slot, "vector recoloring applies to svg and text groups");
  }
  GraphicDocument out = doc;
  if (source == target) return out;
  const RgbColor exact = lab_to_srgb(target);
  const LabColor delta{target.l - source.l, target.a - source.a, target.b - source.b};
  for (auto& e : out.elements) {
    if (group_of(e.kind) != group) continue;
    for (auto& c : e.colors) {
      const LabColor lab = srgb_to_lab(c);
      const double de = ciede2000(lab, source);
      if (de == 0.0) {
        c = exact;
        continue;
      }
      const double w = std::max(0.0, 1.0 - de / opts.tau);
      if (w <= 0.0) continue;
      c = lab_to_srgb({lab.l + w * delta.l, lab.a + w * delta.a, lab.b + w * delta.b});
    }
  }
  return out;
}

RasterImage recolor_image(const RasterImage& image, const Palette& palette,
                          std::span<const PaletteEdit> edits, const RecolorOptions& opts) {
  for (const auto& e : edits) {
    if (e.index >= palette.size()) {
      throw Error(ErrorCode::invalid_slot, "palette index " + std::to_string(e.index) + " out of range");
    }
  }
  if (edits.empty() || image.empty()) return image;

  std::vector<LabColor> offsets(palette.size(), LabColor{0, 0, 0});
  bool any = false;
  for (const auto& e : edits) {
    const LabColor& c = palette.colors[e.index];
    offsets[e.index] = {e.target.l - c.l, e.target.a - c.a, e.target.b - c.b};
    any = any || !(offsets[e.index] == LabColor{0, 0, 0});
  }
  if (!any) return image;

  const auto shift_of = [&](const LabColor& p) {
    std::vector<double> w(palette.size());
    double total = 0.0;
    for (std::size_t i = 0; i < palette.size(); ++i) {
      const LabColor& c = palette.colors[i];
      const double d = std::sqrt((p.l - c.l) * (p.l - c.l) + (p.a - c.a) * (p.a - c.a) +
                                 (p.b - c.b) * (p.b - c.b));
      if (d == 0.0) return offsets[i];
      w[i] = std::pow(d, -opts.idw_exponent);
      total += w[i];
    }
    LabColor s{0, 0, 0};
    for (std::size_t i = 0; i < palette.size(); ++i) {
      const double wi = w[i] / total;
      s.l += wi * offsets[i].l;
      s.a += wi * offsets[i].a;
      s.b += wi * offsets[i].b;
    }
    return s;
  };

  RasterImage out = image;
  std::unordered_map<RgbColor, RgbColor> memo;
  for (auto& px : out.pixels()) {
    auto it = memo.find(px);
    if (it == memo.end()) {
      const LabColor lab = srgb_to_lab(px);
      const LabColor s = shift_of(lab);
      const RgbColor mapped = s == LabColor{0, 0, 0}
                                  ? px
                                  : lab_to_srgb({lab.l + s.l, lab.a + s.a, lab.b + s.b});
      it = memo.emplace(px, mapped).first;
    }
    px = it->second;
  }
  return out;
}

LabColor target_lab(const ColorCode& code, const VocabConfig& cfg) {
  return srgb_to_lab(display_color(code, cfg));
}

GraphicDocument apply_color(const GraphicDocument& doc, const MultiPalette& palettes,
                            const SlotRef& slot, const LabColor& target, const RecolorOptions& opts) {
  check_slots(palettes, std::span<const SlotRef>(&slot, 1));
  const Palette& palette = palettes[slot.group];
  const auto index = static_cast<std::size_t>(slot.slot);
  if (slot.group != Group::image) {
    return recolor_vector(doc, slot.group, palette.colors[index], target, opts);
  }
  GraphicDocument out = doc;
  const PaletteEdit edit{index, target};
  for (auto& e : out.elements) {
    if (group_of(e.kind) == Group::image && e.raster) {
      e.raster = recolor_image(*e.raster, palette, std::span<const PaletteEdit>(&edit, 1), opts);
    }
  }
  return out;
}

GraphicDocument apply_recommendation(const GraphicDocument& doc, const MultiPalette& palettes,
                                     const Recommendation& rec, int rank, const RecolorOptions& opts) {
  if (rank < 1 || static_cast<std::size_t>(rank) > rec.candidates.size()) {
    throw Error(ErrorCode::invalid_argument, "rank " + std::to_string(rank) + " not among candidates");
  }
  const Candidate& c = rec.candidates[static_cast<std::size_t>(rank - 1)];
  return apply_color(doc, palettes, rec.slot, srgb_to_lab(c.display), opts);
}

}  // namespace colorrec
