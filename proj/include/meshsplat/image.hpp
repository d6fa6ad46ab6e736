#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meshsplat/mesh_io.hpp"

namespace meshsplat {

/// Interleaved 8-bit RGB raster, row-major, top row first.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Decodes PNG or JPEG by signature; gray and alpha channels are folded
/// into RGB. Throws UndecodableImage naming `label`.
RgbImage decode_image(ByteView bytes, const std::string& label = "<memory>");
RgbImage load_image(const std::string& path);

Bytes encode_png(const RgbImage& image);
void save_png(const std::string& path, const RgbImage& image);

/// PNG and JPEG files in a directory, sorted by filename.
std::vector<std::string> list_images(const std::string& directory);

}  // namespace meshsplat
