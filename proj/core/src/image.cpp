#include "colorrec/image.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <fstream>
#include <iterator>

#include "colorrec/error.hpp"

namespace colorrec {

RasterImage::RasterImage(int width, int height, RgbColor fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::invalid_argument, "raster dimensions must be positive");
  }
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

RasterImage::RasterImage(int width, int height, std::vector<RgbColor> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::invalid_argument, "raster dimensions must be positive");
  }
  if (pixels_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::invalid_argument, "pixel count does not match width*height");
  }
}

RasterImage RasterImage::resized(int width, int height) const {
  if (width == width_ && height == height_) return *this;
  RasterImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = static_cast<int>((static_cast<std::int64_t>(y) * height_) / height);
    for (int x = 0; x < width; ++x) {
      const int sx = static_cast<int>((static_cast<std::int64_t>(x) * width_) / width);
      out.at(x, y) = at(sx, sy);
    }
  }
  return out;
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::format, std::string("PNG decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  png_color background{255, 255, 255};
  if (!png_image_finish_read(&image, &background, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::format, std::string("PNG decode failed: ") + image.message);
  }
  const int w = static_cast<int>(image.width);
  const int h = static_cast<int>(image.height);
  std::vector<RgbColor> pixels(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = {buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
  }
  return RasterImage(w, h, std::move(pixels));
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  if (img.empty()) throw Error(ErrorCode::invalid_argument, "cannot encode empty raster");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> raw;
  raw.reserve(img.pixels().size() * 3);
  for (const auto& p : img.pixels()) {
    raw.insert(raw.end(), {p.r, p.g, p.b});
  }
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, raw.data(), 0, nullptr)) {
    throw Error(ErrorCode::format, std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, raw.data(), 0, nullptr)) {
    throw Error(ErrorCode::format, std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw Error(ErrorCode::format, "base64 length not a multiple of 4");
  std::vector<std::uint8_t> out(3 * clean.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw Error(ErrorCode::format, "invalid base64");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t size = static_cast<std::size_t>(n);
  if (!clean.empty() && clean.back() == '=') --size;
  if (clean.size() >= 2 && clean[clean.size() - 2] == '=') --size;
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::not_found, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::not_found, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace colorrec
