#pragma once

#include <compare>
#include <functional>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace colorrec {

// 8-bit sRGB triple.
struct RgbColor {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend auto operator<=>(const RgbColor&, const RgbColor&) = default;
};

// CIELAB under D65 / 2 degree observer. L in [0, 100]; a and b nominally
// in [-128, 127].
struct LabColor {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;

  friend bool operator==(const LabColor&, const LabColor&) = default;
};

// Bin indices of a quantized LAB color. Canonical text form is "li_ai_bi".
struct ColorCode {
  std::uint16_t li = 0;
  std::uint16_t ai = 0;
  std::uint16_t bi = 0;

  friend auto operator<=>(const ColorCode&, const ColorCode&) = default;
};

struct VocabConfig {
  int bins_per_axis = 16;

  void validate() const;
  double bin_width() const { return 256.0 / bins_per_axis; }
  bool contains(const ColorCode& c) const;
};

LabColor srgb_to_lab(RgbColor c);

// Out-of-gamut results are clamped per channel.
RgbColor lab_to_srgb(const LabColor& c);

ColorCode quantize(const LabColor& c, const VocabConfig& cfg = {});
inline ColorCode quantize(RgbColor c, const VocabConfig& cfg = {}) {
  return quantize(srgb_to_lab(c), cfg);
}

// Center of the bin in LAB. Throws Error(unknown_code) for indices >= B.
LabColor code_center(const ColorCode& code, const VocabConfig& cfg = {});

// sRGB swatch for a code. Uses the converted bin center when it quantizes
// back to `code`; otherwise the in-gamut sRGB color nearest to the center
// that still falls inside the bin. Bins with no sRGB member fall back to
// the clamped center.
RgbColor display_color(const ColorCode& code, const VocabConfig& cfg = {});

// CIEDE2000 with kL = kC = kH = 1.
double ciede2000(const LabColor& x, const LabColor& y);

// Scaled-space mapping used by quantization: L -> [0,255], a/b offset by 128,
// all clamped into [0,255].
struct ScaledLab {
  double l, a, b;
};
ScaledLab to_scaled(const LabColor& c);
LabColor from_scaled(const ScaledLab& s);

std::string to_string(const ColorCode& code);
std::optional<ColorCode> parse_code(std::string_view text);

std::string to_hex(RgbColor c);
std::optional<RgbColor> parse_hex(std::string_view text);

}  // namespace colorrec

template <>
struct std::hash<colorrec::ColorCode> {
  std::size_t operator()(const colorrec::ColorCode& c) const noexcept {
    return (std::size_t{c.li} << 32) ^ (std::size_t{c.ai} << 16) ^ c.bi;
  }
};

template <>
struct std::hash<colorrec::RgbColor> {
  std::size_t operator()(const colorrec::RgbColor& c) const noexcept {
    return (std::size_t{c.r} << 16) | (std::size_t{c.g} << 8) | c.b;
  }
};
