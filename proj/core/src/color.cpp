#include "colorrec/color.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <vector>

#include "colorrec/error.hpp"

namespace colorrec {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::parse: return "parse";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::wrong_kind: return "wrong_kind";
    case ErrorCode::invalid_slot: return "invalid_slot";
    case ErrorCode::unknown_code: return "unknown_code";
    case ErrorCode::format: return "format";
    case ErrorCode::diverged: return "diverged";
  }
  return "unknown";
}

namespace {

// IEC 61966-2-1 primaries, D65.
constexpr std::array<std::array<double, 3>, 3> kRgbToXyz{{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};
constexpr std::array<std::array<double, 3>, 3> kXyzToRgb{{
    {3.2404542, -1.5371385, -0.4985314},
    {-0.9692660, 1.8760108, 0.0415560},
    {0.0556434, -0.2040259, 1.0572252},
}};

// Reference white is the image of sRGB (1,1,1) so that white maps to a=b=0.
constexpr double kWhiteX = 0.4124564 + 0.3575761 + 0.1804375;
constexpr double kWhiteY = 0.2126729 + 0.7151522 + 0.0721750;
constexpr double kWhiteZ = 0.0193339 + 0.1191920 + 0.9503041;

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

double srgb_decode(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double srgb_encode(double v) {
  return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
  return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

double lab_f_inv(double f) {
  const double f3 = f * f * f;
  return f3 > kEpsilon ? f3 : (116.0 * f - 16.0) / kKappa;
}

std::uint8_t to_channel(double v) {
  const double scaled = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(scaled);
}

int bin_index(double scaled, const VocabConfig& cfg) {
  const int idx = static_cast<int>(std::floor(scaled / cfg.bin_width()));
  return std::clamp(idx, 0, cfg.bins_per_axis - 1);
}

double squared_distance(const LabColor& x, const LabColor& y) {
  const double dl = x.l - y.l, da = x.a - y.a, db = x.b - y.b;
  return dl * dl + da * da + db * db;
}

}  // namespace

void VocabConfig::validate() const {
  if (bins_per_axis < 2 || bins_per_axis > 256) {
    throw Error(ErrorCode::invalid_argument, "bins_per_axis must be in [2, 256]");
  }
}

bool VocabConfig::contains(const ColorCode& c) const {
  const auto b = static_cast<std::uint16_t>(bins_per_axis);
  return c.li < b && c.ai < b && c.bi < b;
}

namespace {

LabColor linear_to_lab(const double (&rgb)[3]) {
  double xyz[3];
  for (int i = 0; i < 3; ++i) {
    xyz[i] = kRgbToXyz[i][0] * rgb[0] + kRgbToXyz[i][1] * rgb[1] +
             kRgbToXyz[i][2] * rgb[2];
  }
  const double fx = lab_f(xyz[0] / kWhiteX);
  const double fy = lab_f(xyz[1] / kWhiteY);
  const double fz = lab_f(xyz[2] / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace

LabColor srgb_to_lab(RgbColor c) {
  const double rgb[3] = {srgb_decode(c.r / 255.0), srgb_decode(c.g / 255.0),
                         srgb_decode(c.b / 255.0)};
  return linear_to_lab(rgb);
}

RgbColor lab_to_srgb(const LabColor& c) {
  const double fy = (c.l + 16.0) / 116.0;
  const double fx = fy + c.a / 500.0;
  const double fz = fy - c.b / 200.0;
  const double y = c.l > kKappa * kEpsilon ? fy * fy * fy : c.l / kKappa;
  const double xyz[3] = {lab_f_inv(fx) * kWhiteX, y * kWhiteY,
                         lab_f_inv(fz) * kWhiteZ};
  double rgb[3];
  for (int i = 0; i < 3; ++i) {
    const double lin = kXyzToRgb[i][0] * xyz[0] + kXyzToRgb[i][1] * xyz[1] +
                       kXyzToRgb[i][2] * xyz[2];
    rgb[i] = srgb_encode(std::clamp(lin, 0.0, 1.0));
  }
  return {to_channel(rgb[0]), to_channel(rgb[1]), to_channel(rgb[2])};
}

ScaledLab to_scaled(const LabColor& c) {
  return {std::clamp(c.l * 255.0 / 100.0, 0.0, 255.0),
          std::clamp(c.a + 128.0, 0.0, 255.0),
          std::clamp(c.b + 128.0, 0.0, 255.0)};
}

LabColor from_scaled(const ScaledLab& s) {
  return {s.l * 100.0 / 255.0, s.a - 128.0, s.b - 128.0};
}

ColorCode quantize(const LabColor& c, const VocabConfig& cfg) {
  const ScaledLab s = to_scaled(c);
  return {static_cast<std::uint16_t>(bin_index(s.l, cfg)),
          static_cast<std::uint16_t>(bin_index(s.a, cfg)),
          static_cast<std::uint16_t>(bin_index(s.b, cfg))};
}

LabColor code_center(const ColorCode& code, const VocabConfig& cfg) {
  if (!cfg.contains(code)) {
    throw Error(ErrorCode::unknown_code,
                "code " + to_string(code) + " outside " +
                    std::to_string(cfg.bins_per_axis) + " bins");
  }
  const double w = cfg.bin_width();
  return from_scaled({(code.li + 0.5) * w, (code.ai + 0.5) * w, (code.bi + 0.5) * w});
}

namespace {

// Coarse sRGB lattice per bin count: for every code, the lattice color
// closest to the bin center among those quantizing into the bin.
struct DisplayTable {
  std::vector<std::optional<RgbColor>> coarse;
  std::map<ColorCode, RgbColor> refined;
  int step = 4;
};

std::size_t flat_index(const ColorCode& c, int bins) {
  return (static_cast<std::size_t>(c.li) * bins + c.ai) * bins + c.bi;
}

// A step of 1 scans every sRGB color; used once some reachable bin turns out
// to be too thin for the coarse grid.
DisplayTable build_display_table(const VocabConfig& cfg, int step) {
  const int bins = cfg.bins_per_axis;
  DisplayTable table;
  table.step = step;
  table.coarse.resize(static_cast<std::size_t>(bins) * bins * bins);
  std::vector<double> best(table.coarse.size(), std::numeric_limits<double>::infinity());
  std::vector<int> levels;
  for (int v = 0; v < 256; v += step) levels.push_back(v);
  if (levels.back() != 255) levels.push_back(255);
  std::array<double, 256> linear;
  for (int v = 0; v < 256; ++v) linear[static_cast<std::size_t>(v)] = srgb_decode(v / 255.0);
  for (int r : levels) {
    for (int g : levels) {
      for (int b : levels) {
        const RgbColor rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                           static_cast<std::uint8_t>(b)};
        const double lin[3] = {linear[rgb.r], linear[rgb.g], linear[rgb.b]};
        const LabColor lab = linear_to_lab(lin);
        const ColorCode code = quantize(lab, cfg);
        const std::size_t i = flat_index(code, bins);
        const double d = squared_distance(lab, code_center(code, cfg));
        if (d < best[i]) {
          best[i] = d;
          table.coarse[i] = rgb;
        }
      }
    }
  }
  return table;
}

}  // namespace

RgbColor display_color(const ColorCode& code, const VocabConfig& cfg) {
  const LabColor center = code_center(code, cfg);
  const RgbColor direct = lab_to_srgb(center);
  if (quantize(direct, cfg) == code) return direct;

  static std::mutex mutex;
  static std::map<int, DisplayTable> tables;
  std::lock_guard lock(mutex);
  auto it = tables.find(cfg.bins_per_axis);
  if (it == tables.end()) {
    it = tables.emplace(cfg.bins_per_axis, build_display_table(cfg, 4)).first;
  }
  DisplayTable& table = it->second;
  if (auto hit = table.refined.find(code); hit != table.refined.end()) {
    return hit->second;
  }
  if (!table.coarse[flat_index(code, cfg.bins_per_axis)] && table.step > 1) {
    table = build_display_table(cfg, 1);
  }
  const auto& coarse = table.coarse[flat_index(code, cfg.bins_per_axis)];
  if (!coarse) return direct;

  RgbColor best = *coarse;
  double best_d = squared_distance(srgb_to_lab(best), center);
  for (int dr = -4; dr <= 4; ++dr) {
    for (int dg = -4; dg <= 4; ++dg) {
      for (int db = -4; db <= 4; ++db) {
        const int r = coarse->r + dr, g = coarse->g + dg, b = coarse->b + db;
        if (r < 0 || r > 255 || g < 0 || g > 255 || b < 0 || b > 255) continue;
        const RgbColor rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                           static_cast<std::uint8_t>(b)};
        const LabColor lab = srgb_to_lab(rgb);
        if (quantize(lab, cfg) != code) continue;
        const double d = squared_distance(lab, center);
        if (d < best_d) {
          best_d = d;
          best = rgb;
        }
      }
    }
  }
  table.refined.emplace(code, best);
  return best;
}

double ciede2000(const LabColor& x, const LabColor& y) {
  using std::numbers::pi;
  constexpr double k25pow7 = 6103515625.0;
  const auto deg = [](double rad) { return rad * 180.0 / pi; };
  const auto rad = [](double d) { return d * pi / 180.0; };

  const double c1 = std::hypot(x.a, x.b);
  const double c2 = std::hypot(y.a, y.b);
  const double c_mean7 = std::pow((c1 + c2) / 2.0, 7.0);
  const double g = 0.5 * (1.0 - std::sqrt(c_mean7 / (c_mean7 + k25pow7)));
  const double a1 = (1.0 + g) * x.a;
  const double a2 = (1.0 + g) * y.a;
  const double cp1 = std::hypot(a1, x.b);
  const double cp2 = std::hypot(a2, y.b);

  auto hue = [&](double b, double a) {
    if (a == 0.0 && b == 0.0) return 0.0;
    double h = deg(std::atan2(b, a));
    return h < 0.0 ? h + 360.0 : h;
  };
  const double hp1 = hue(x.b, a1);
  const double hp2 = hue(y.b, a2);

  const double dl = y.l - x.l;
  const double dc = cp2 - cp1;
  double dh = 0.0;
  if (cp1 * cp2 != 0.0) {
    dh = hp2 - hp1;
    if (dh > 180.0) dh -= 360.0;
    else if (dh < -180.0) dh += 360.0;
  }
  const double dH = 2.0 * std::sqrt(cp1 * cp2) * std::sin(rad(dh / 2.0));

  const double l_mean = (x.l + y.l) / 2.0;
  const double cp_mean = (cp1 + cp2) / 2.0;
  double hp_mean = hp1 + hp2;
  if (cp1 * cp2 != 0.0) {
    if (std::abs(hp1 - hp2) <= 180.0) hp_mean /= 2.0;
    else if (hp1 + hp2 < 360.0) hp_mean = (hp_mean + 360.0) / 2.0;
    else hp_mean = (hp_mean - 360.0) / 2.0;
  }

  const double t = 1.0 - 0.17 * std::cos(rad(hp_mean - 30.0)) +
                   0.24 * std::cos(rad(2.0 * hp_mean)) +
                   0.32 * std::cos(rad(3.0 * hp_mean + 6.0)) -
                   0.20 * std::cos(rad(4.0 * hp_mean - 63.0));
  const double d_theta = 30.0 * std::exp(-std::pow((hp_mean - 275.0) / 25.0, 2.0));
  const double cp_mean7 = std::pow(cp_mean, 7.0);
  const double rc = 2.0 * std::sqrt(cp_mean7 / (cp_mean7 + k25pow7));
  const double l50 = (l_mean - 50.0) * (l_mean - 50.0);
  const double sl = 1.0 + 0.015 * l50 / std::sqrt(20.0 + l50);
  const double sc = 1.0 + 0.045 * cp_mean;
  const double sh = 1.0 + 0.015 * cp_mean * t;
  const double rt = -std::sin(rad(2.0 * d_theta)) * rc;

  const double tl = dl / sl, tc = dc / sc, th = dH / sh;
  return std::sqrt(std::max(0.0, tl * tl + tc * tc + th * th + rt * tc * th));
}

std::string to_string(const ColorCode& code) {
  return std::to_string(code.li) + "_" + std::to_string(code.ai) + "_" +
         std::to_string(code.bi);
}

std::optional<ColorCode> parse_code(std::string_view text) {
  std::uint16_t parts[3];
  const char* p = text.data();
  const char* end = text.data() + text.size();
  for (int i = 0; i < 3; ++i) {
    if (i > 0) {
      if (p == end || *p != '_') return std::nullopt;
      ++p;
    }
    auto [next, ec] = std::from_chars(p, end, parts[i]);
    if (ec != std::errc{} || next == p) return std::nullopt;
    p = next;
  }
  if (p != end) return std::nullopt;
  return ColorCode{parts[0], parts[1], parts[2]};
}

std::string to_hex(RgbColor c) {
  static constexpr char kDigits[] = "0123456789ABCDEF";
  std::string out = "#";
  for (std::uint8_t v : {c.r, c.g, c.b}) {
    out.push_back(kDigits[v >> 4]);
    out.push_back(kDigits[v & 0xF]);
  }
  return out;
}

std::optional<RgbColor> parse_hex(std::string_view text) {
  if (text.size() != 7 || text[0] != '#') return std::nullopt;
  std::uint8_t v[3];
  for (int i = 0; i < 3; ++i) {
    const char* first = text.data() + 1 + 2 * i;
    auto [next, ec] = std::from_chars(first, first + 2, v[i], 16);
    if (ec != std::errc{} || next != first + 2) return std::nullopt;
  }
  return RgbColor{v[0], v[1], v[2]};
}

}  // namespace colorrec
