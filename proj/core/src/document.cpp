#include "colorrec/document.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "colorrec/error.hpp"
#include "json.hpp"

namespace colorrec {

using nlohmann::json;

namespace {

constexpr std::string_view kDataUriPrefix = "data:image/png;base64,";

struct KindName {
  ElementKind kind;
  std::string_view name;
};
constexpr KindName kKindNames[] = {
    {ElementKind::image, "imageElement"},
    {ElementKind::mask, "maskElement"},
    {ElementKind::colored_background, "coloredBackground"},
    {ElementKind::svg, "svgElement"},
    {ElementKind::text, "textElement"},
};

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::parse, msg, path);
}

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "/" + key, "missing field");
  return *it;
}

double require_number(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number()) fail(path + "/" + key, "expected number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path + "/" + key, "non-finite number");
  return d;
}

int require_positive_int(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0 ||
      v.get<std::int64_t>() > 1 << 16) {
    fail(path + "/" + key, "expected positive integer");
  }
  return v.get<int>();
}

RasterImage load_raster(const json& v, const std::string& base_dir, const std::string& path) {
  if (!v.is_string()) fail(path, "raster must be a string");
  const auto& s = v.get_ref<const std::string&>();
  try {
    if (s.starts_with(kDataUriPrefix)) {
      return decode_png(base64_decode(std::string_view(s).substr(kDataUriPrefix.size())));
    }
    if (s.ends_with(".png") || s.ends_with(".PNG")) {
      const auto file = std::filesystem::path(base_dir) / s;
      return decode_png(read_file_bytes(file.string()));
    }
    return decode_png(base64_decode(s));
  } catch (const Error& e) {
    fail(path, std::string("unreadable raster: ") + e.what());
  }
}

RgbColor parse_color_value(const json& v, const std::string& path) {
  if (v.is_string()) {
    if (auto c = parse_hex(v.get_ref<const std::string&>())) return *c;
    fail(path, "expected #RRGGBB color");
  }
  if (v.is_array() && v.size() == 3) {
    std::uint8_t ch[3];
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) fail(path, "expected [r,g,b]");
      const double d = v[i].get<double>();
      if (d < 0 || d > 255) fail(path, "channel out of range");
      ch[i] = static_cast<std::uint8_t>(std::lround(d));
    }
    return {ch[0], ch[1], ch[2]};
  }
  fail(path, "expected color");
}

GraphicDocument parse_native(const json& root, const std::string& base_dir) {
  GraphicDocument doc;
  const json& canvas = require(root, "canvas", "");
  doc.width = require_positive_int(canvas, "width", "/canvas");
  doc.height = require_positive_int(canvas, "height", "/canvas");
  const json& elements = require(root, "elements", "");
  if (!elements.is_array()) fail("/elements", "expected array");
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const std::string path = "/elements/" + std::to_string(i);
    const json& e = elements[i];
    Element el;
    const json& id = require(e, "id", path);
    if (!id.is_string()) fail(path + "/id", "expected string");
    el.id = id.get<std::string>();
    const json& kind = require(e, "kind", path);
    if (!kind.is_string()) fail(path + "/kind", "expected string");
    auto k = parse_element_kind(kind.get_ref<const std::string&>());
    if (!k) fail(path + "/kind", "unknown element kind '" + kind.get<std::string>() + "'");
    el.kind = *k;
    const json& pos = require(e, "position", path);
    el.x = require_number(pos, "x", path + "/position");
    el.y = require_number(pos, "y", path + "/position");
    const json& size = require(e, "size", path);
    el.width = require_number(size, "w", path + "/size");
    el.height = require_number(size, "h", path + "/size");
    if (auto it = e.find("opacity"); it != e.end()) {
      if (!it->is_number()) fail(path + "/opacity", "expected number");
      el.opacity = it->get<double>();
    }
    if (auto it = e.find("colors"); it != e.end()) {
      if (!it->is_array()) fail(path + "/colors", "expected array");
      for (std::size_t c = 0; c < it->size(); ++c) {
        el.colors.push_back(parse_color_value((*it)[c], path + "/colors/" + std::to_string(c)));
      }
    }
    if (auto it = e.find("raster"); it != e.end() && !it->is_null()) {
      el.raster = load_raster(*it, base_dir, path + "/raster");
    }
    doc.elements.push_back(std::move(el));
  }
  return doc;
}

// Columnar Crello export: parallel arrays with geometry normalized to the
// canvas, colors as [r,g,b] and images as base64 PNG.
GraphicDocument parse_crello(const json& root) {
  GraphicDocument doc;
  const auto dim = [&](const char* key) {
    const json& v = require(root, key, "");
    if (!v.is_number() || v.get<double>() <= 0) fail(std::string("/") + key, "expected positive number");
    return static_cast<int>(std::lround(v.get<double>()));
  };
  doc.width = dim("canvas_width");
  doc.height = dim("canvas_height");
  const json& types = require(root, "type", "");
  if (!types.is_array()) fail("/type", "expected array");
  const std::size_t n = types.size();
  const auto column = [&](const char* key, bool required) -> const json* {
    auto it = root.find(key);
    if (it == root.end()) {
      if (required) fail(std::string("/") + key, "missing field");
      return nullptr;
    }
    if (!it->is_array() || it->size() != n) fail(std::string("/") + key, "column length mismatch");
    return &*it;
  };
  const json* left = column("left", true);
  const json* top = column("top", true);
  const json* width = column("width", true);
  const json* height = column("height", true);
  const json* opacity = column("opacity", false);
  const json* color = column("color", false);
  const json* image = column("image", false);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string idx = "/" + std::to_string(i);
    Element el;
    el.id = "e" + std::to_string(i);
    if (!types[i].is_string()) fail("/type" + idx, "expected string");
    auto k = parse_element_kind(types[i].get_ref<const std::string&>());
    if (!k) fail("/type" + idx, "unknown element kind '" + types[i].get<std::string>() + "'");
    el.kind = *k;
    const auto num = [&](const json* col, const char* key) {
      const json& v = (*col)[i];
      if (!v.is_number()) fail(std::string("/") + key + idx, "expected number");
      return v.get<double>();
    };
    el.x = num(left, "left") * doc.width;
    el.y = num(top, "top") * doc.height;
    el.width = num(width, "width") * doc.width;
    el.height = num(height, "height") * doc.height;
    if (opacity) el.opacity = num(opacity, "opacity");
    if (color && !(*color)[i].is_null() && !is_image_like(el.kind)) {
      el.colors.push_back(parse_color_value((*color)[i], "/color" + idx));
    }
    if (image && is_image_like(el.kind) && (*image)[i].is_string() &&
        !(*image)[i].get_ref<const std::string&>().empty()) {
      el.raster = load_raster((*image)[i], {}, "/image" + idx);
    }
    doc.elements.push_back(std::move(el));
  }
  return doc;
}

}  // namespace

std::string_view to_string(ElementKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

std::optional<ElementKind> parse_element_kind(std::string_view name) {
  for (const auto& kn : kKindNames) {
    if (kn.name == name) return kn.kind;
  }
  return std::nullopt;
}

bool is_image_like(ElementKind kind) {
  return kind == ElementKind::image || kind == ElementKind::mask;
}

std::string_view to_string(Group group) {
  switch (group) {
    case Group::image: return "image";
    case Group::svg: return "svg";
    case Group::text: return "text";
  }
  return "unknown";
}

std::optional<Group> parse_group(std::string_view name) {
  for (Group g : kGroups) {
    if (to_string(g) == name) return g;
  }
  return std::nullopt;
}

Group group_of(ElementKind kind) {
  switch (kind) {
    case ElementKind::image:
    case ElementKind::mask: return Group::image;
    case ElementKind::colored_background:
    case ElementKind::svg: return Group::svg;
    case ElementKind::text: return Group::text;
  }
  return Group::svg;
}

const Element* GraphicDocument::find(std::string_view id) const {
  for (const auto& e : elements) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

void validate_document(const GraphicDocument& doc) {
  if (doc.width <= 0 || doc.height <= 0) fail("/canvas", "canvas dimensions must be positive");
  if (doc.elements.empty()) fail("/elements", "document needs at least one element");
  std::set<std::string_view> ids;
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    const std::string path = "/elements/" + std::to_string(i);
    const Element& e = doc.elements[i];
    if (e.id.empty()) fail(path + "/id", "empty id");
    if (!ids.insert(e.id).second) fail(path + "/id", "duplicate id '" + e.id + "'");
    if (!(e.width > 0) || !(e.height > 0)) fail(path + "/size", "size must be positive");
    if (!(e.opacity >= 0.0 && e.opacity <= 1.0)) fail(path + "/opacity", "opacity outside [0,1]");
    if (is_image_like(e.kind)) {
      if (!e.raster) fail(path + "/raster", "image element without raster");
    } else {
      if (e.raster) fail(path + "/raster", "raster on non-image element");
      if (e.colors.empty()) fail(path + "/colors", "vector and text elements need colors");
    }
  }
}

GraphicDocument parse_document(std::string_view text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail("", std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) fail("", "expected object");
  GraphicDocument doc = root.contains("type") ? parse_crello(root) : parse_native(root, base_dir);
  validate_document(doc);
  return doc;
}

GraphicDocument load_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::not_found, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string serialize_document(const GraphicDocument& doc) {
  json root;
  root["canvas"] = {{"width", doc.width}, {"height", doc.height}};
  json elements = json::array();
  for (const auto& e : doc.elements) {
    json el;
    el["id"] = e.id;
    el["kind"] = std::string(to_string(e.kind));
    el["position"] = {{"x", e.x}, {"y", e.y}};
    el["size"] = {{"w", e.width}, {"h", e.height}};
    el["opacity"] = e.opacity;
    json colors = json::array();
    for (const auto& c : e.colors) colors.push_back(to_hex(c));
    el["colors"] = std::move(colors);
    if (e.raster) {
      el["raster"] = std::string(kDataUriPrefix) + base64_encode(encode_png(*e.raster));
    }
    elements.push_back(std::move(el));
  }
  root["elements"] = std::move(elements);
  return root.dump();
}

ElementGroups group_elements(const GraphicDocument& doc) {
  ElementGroups groups;
  for (std::size_t i = 0; i < doc.elements.size(); ++i) {
    groups.members[static_cast<std::size_t>(group_of(doc.elements[i].kind))].push_back(i);
  }
  return groups;
}

std::uint64_t PixelMultiset::total() const {
  std::uint64_t n = 0;
  for (const auto& [c, k] : counts) n += k;
  return n;
}

namespace {

// Canvas-pixel rectangle covered by an element, clipped to the canvas.
struct PixelRect {
  int x0, y0, x1, y1;
  std::uint64_t area() const {
    return x1 > x0 && y1 > y0 ? static_cast<std::uint64_t>(x1 - x0) * (y1 - y0) : 0;
  }
};

PixelRect visible_rect(const GraphicDocument& doc, const Element& e) {
  const auto clip = [](double v, int hi) {
    return static_cast<int>(std::lround(std::clamp(v, 0.0, static_cast<double>(hi))));
  };
  return {clip(e.x, doc.width), clip(e.y, doc.height), clip(e.x + e.width, doc.width),
          clip(e.y + e.height, doc.height)};
}

// Raster pixel for canvas pixel (cx, cy) with the raster stretched over the
// element's full box.
RgbColor sample_raster(const Element& e, int cx, int cy) {
  const RasterImage& img = *e.raster;
  const double u = (cx + 0.5 - e.x) / e.width;
  const double v = (cy + 0.5 - e.y) / e.height;
  const int sx = std::clamp(static_cast<int>(u * img.width()), 0, img.width() - 1);
  const int sy = std::clamp(static_cast<int>(v * img.height()), 0, img.height() - 1);
  return img.at(sx, sy);
}

}  // namespace

PixelMultiset composite_elements(const GraphicDocument& doc, const std::vector<std::size_t>& indices) {
  PixelMultiset out;
  for (std::size_t idx : indices) {
    const Element& e = doc.elements.at(idx);
    if (e.opacity < kMinVisibleOpacity) continue;
    const PixelRect r = visible_rect(doc, e);
    const std::uint64_t area = r.area();
    if (area == 0) continue;
    if (is_image_like(e.kind)) {
      if (!e.raster || e.raster->empty()) continue;
      for (int y = r.y0; y < r.y1; ++y) {
        for (int x = r.x0; x < r.x1; ++x) out.add(sample_raster(e, x, y));
      }
    } else if (!e.colors.empty()) {
      const std::uint64_t n = e.colors.size();
      for (std::uint64_t i = 0; i < n; ++i) {
        out.add(e.colors[i], area / n + (i < area % n ? 1 : 0));
      }
    }
  }
  return out;
}

PixelMultiset composite_group(const GraphicDocument& doc, Group group) {
  return composite_elements(doc, group_elements(doc)[group]);
}

GraphicDocument replace_image_element(const GraphicDocument& doc, std::string_view element_id,
                                      RasterImage image) {
  if (image.empty()) throw Error(ErrorCode::invalid_argument, "replacement image is empty");
  GraphicDocument out = doc;
  for (auto& e : out.elements) {
    if (e.id != element_id) continue;
    if (!is_image_like(e.kind)) {
      throw Error(ErrorCode::wrong_kind,
                  "element '" + e.id + "' is " + std::string(to_string(e.kind)) + ", not an image");
    }
    e.raster = std::move(image);
    return out;
  }
  throw Error(ErrorCode::not_found, "no element '" + std::string(element_id) + "'");
}

RasterImage render_preview(const GraphicDocument& doc) {
  RasterImage canvas(doc.width, doc.height, RgbColor{255, 255, 255});
  const auto blend = [](RgbColor dst, RgbColor src, double alpha) {
    if (alpha >= 1.0) return src;
    const auto mix = [alpha](std::uint8_t d, std::uint8_t s) {
      return static_cast<std::uint8_t>(std::lround(d + alpha * (s - d)));
    };
    return RgbColor{mix(dst.r, src.r), mix(dst.g, src.g), mix(dst.b, src.b)};
  };
  for (const auto& e : doc.elements) {
    const PixelRect r = visible_rect(doc, e);
    if (r.area() == 0) continue;
    const int w = r.x1 - r.x0;
    for (int y = r.y0; y < r.y1; ++y) {
      if (e.kind == ElementKind::text && ((y - r.y0) / 3) % 2 == 1) continue;
      for (int x = r.x0; x < r.x1; ++x) {
        RgbColor src;
        if (is_image_like(e.kind)) {
          if (!e.raster) continue;
          src = sample_raster(e, x, y);
        } else {
          if (e.colors.empty()) continue;
          // Vertical stripes, one per fill color.
          const std::size_t band = static_cast<std::size_t>(x - r.x0) * e.colors.size() / w;
          src = e.colors[band];
        }
        canvas.at(x, y) = blend(canvas.at(x, y), src, e.opacity);
      }
    }
  }
  return canvas;
}

}  // namespace colorrec
