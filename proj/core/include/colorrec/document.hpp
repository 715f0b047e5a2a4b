#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "colorrec/color.hpp"
#include "colorrec/image.hpp"

namespace colorrec {

enum class ElementKind {
  image,             // imageElement
  mask,              // maskElement
  colored_background,  // coloredBackground
  svg,               // svgElement
  text,              // textElement
};

std::string_view to_string(ElementKind kind);
std::optional<ElementKind> parse_element_kind(std::string_view name);
bool is_image_like(ElementKind kind);

// The three palette groups, in sequence order.
enum class Group { image = 0, svg = 1, text = 2 };
inline constexpr std::array<Group, 3> kGroups{Group::image, Group::svg, Group::text};

std::string_view to_string(Group group);
std::optional<Group> parse_group(std::string_view name);
Group group_of(ElementKind kind);

struct Element {
  std::string id;
  ElementKind kind = ElementKind::colored_background;
  double x = 0.0, y = 0.0;
  double width = 0.0, height = 0.0;
  double opacity = 1.0;
  std::vector<RgbColor> colors;
  std::optional<RasterImage> raster;

  friend bool operator==(const Element&, const Element&) = default;
};

// Elements are stored in z-order, back to front.
struct GraphicDocument {
  int width = 0;
  int height = 0;
  std::vector<Element> elements;

  const Element* find(std::string_view id) const;

  friend bool operator==(const GraphicDocument&, const GraphicDocument&) = default;
};

// Elements below this opacity do not contribute colors.
inline constexpr double kMinVisibleOpacity = 0.05;

// Parses either the native schema or a columnar Crello export (detected by a
// top-level "type" array). Relative raster paths resolve against `base_dir`.
// Throws Error(parse) carrying the offending path.
GraphicDocument parse_document(std::string_view text, const std::string& base_dir = {});
GraphicDocument load_document(const std::string& path);

// Native schema; rasters are embedded as base64 PNG data URIs.
std::string serialize_document(const GraphicDocument& doc);

// Throws Error(parse) when the document breaks an invariant.
void validate_document(const GraphicDocument& doc);

// Element indices per group; a partition of doc.elements.
struct ElementGroups {
  std::array<std::vector<std::size_t>, 3> members;
  const std::vector<std::size_t>& operator[](Group g) const {
    return members[static_cast<std::size_t>(g)];
  }
};
ElementGroups group_elements(const GraphicDocument& doc);

// Multiset of visible pixel colors, stored as counts per color.
struct PixelMultiset {
  std::map<RgbColor, std::uint64_t> counts;
  std::uint64_t total() const;
  void add(RgbColor c, std::uint64_t n = 1) {
    if (n > 0) counts[c] += n;
  }
};

// Union of visible pixels of the group's elements, ignoring occlusion.
// Rasters are sampled at the element's size; solid fills contribute pixel
// counts proportional to visible area, split evenly across their colors.
PixelMultiset composite_group(const GraphicDocument& doc, Group group);
PixelMultiset composite_elements(const GraphicDocument& doc, const std::vector<std::size_t>& indices);

// Swaps the raster of an image-like element. Throws not_found / wrong_kind.
GraphicDocument replace_image_element(const GraphicDocument& doc, std::string_view element_id,
                                      RasterImage image);

// Flat canvas-resolution preview, painted back to front with opacity blending.
// Not a faithful renderer: text boxes are drawn as striped fills.
RasterImage render_preview(const GraphicDocument& doc);

}  // namespace colorrec
