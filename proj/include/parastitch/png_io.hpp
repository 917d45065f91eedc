#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "parastitch/image.hpp"

namespace parastitch {

struct Gray16Raster {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;

  friend bool operator==(const Gray16Raster&, const Gray16Raster&) = default;
};

// Reads gray, RGB, RGBA or palette PNGs; 16-bit channels are reduced to 8.
// An alpha channel becomes the coverage mask (alpha >= 128 means covered).
// Throws kIoError if the file cannot be opened, kDecodeError otherwise.
Image read_png(const std::filesystem::path& path);

// Writes RGBA when with_alpha (alpha = 255 * coverage), RGB otherwise.
void write_png(const std::filesystem::path& path, const Image& img,
               bool with_alpha);

// Single-channel 8- or 16-bit PNG; color inputs are rejected.
Gray16Raster read_png_gray16(const std::filesystem::path& path);
void write_png_gray16(const std::filesystem::path& path,
                      const Gray16Raster& raster);

}  // namespace parastitch
