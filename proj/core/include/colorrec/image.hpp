#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colorrec/color.hpp"

namespace colorrec {

// Row-major 8-bit RGB raster. Alpha is dropped on decode.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, RgbColor fill = {});
  RasterImage(int width, int height, std::vector<RgbColor> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  RgbColor& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  const RgbColor& at(int x, int y) const {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<RgbColor> pixels() { return pixels_; }
  std::span<const RgbColor> pixels() const { return pixels_; }

  // Nearest-neighbour resample.
  RasterImage resized(int width, int height) const;

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<RgbColor> pixels_;
};

RasterImage decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const RasterImage& image);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace colorrec
