#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "parastitch/geometry.hpp"

namespace parastitch {

using Rgb = std::array<double, 3>;

// 8-bit RGB raster with a per-pixel coverage flag. Uncovered pixels contribute
// to no metric or blend.
class Image {
 public:
  Image() = default;
  Image(int width, int height, bool covered = true);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  std::uint8_t& at(int x, int y, int c) { return rgb_[index(x, y) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return rgb_[index(x, y) * 3 + c];
  }
  void set(int x, int y, const Rgb& v);
  Rgb get(int x, int y) const;

  bool covered(int x, int y) const { return coverage_[index(x, y)] != 0; }
  void set_covered(int x, int y, bool v) { coverage_[index(x, y)] = v ? 1 : 0; }

  const std::vector<std::uint8_t>& rgb() const { return rgb_; }
  std::vector<std::uint8_t>& rgb() { return rgb_; }
  const std::vector<std::uint8_t>& coverage() const { return coverage_; }
  std::vector<std::uint8_t>& coverage() { return coverage_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> rgb_;
  std::vector<std::uint8_t> coverage_;
};

std::uint8_t to_u8(double v);

// Bilinear sample at p with edge clamping. Defined on [0, w) x [0, h); taps
// that are uncovered or rejected by `accept` are dropped and the remaining
// weights renormalized. nullopt when nothing usable remains.
std::optional<Rgb> sample_bilinear(
    const Image& img, Point2 p,
    const std::function<bool(int, int)>& accept = nullptr);

}  // namespace parastitch
