#include "parastitch/image.hpp"

#include <cmath>

#include "parastitch/error.hpp"

namespace parastitch {

Image::Image(int width, int height, bool covered)
    : width_(width),
      height_(height),
      rgb_(static_cast<std::size_t>(width) * height * 3, 0),
      coverage_(static_cast<std::size_t>(width) * height, covered ? 1 : 0) {
  require(width >= 0 && height >= 0, ErrorCode::kPreconditionViolation,
          "negative image dimensions");
}

void Image::set(int x, int y, const Rgb& v) {
  for (int c = 0; c < 3; ++c) at(x, y, c) = to_u8(v[c]);
}

Rgb Image::get(int x, int y) const {
  return {static_cast<double>(at(x, y, 0)), static_cast<double>(at(x, y, 1)),
          static_cast<double>(at(x, y, 2))};
}

std::uint8_t to_u8(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v));
}

namespace {
constexpr double kSnapTolerance = 1e-9;
}  // namespace

std::optional<Rgb> sample_bilinear(const Image& img, Point2 p,
                                   const std::function<bool(int, int)>& accept) {
  // Round-off from mapping through a homography should not blur pixel hits.
  auto snap = [](double v) {
    const double r = std::round(v);
    return std::abs(v - r) <= kSnapTolerance ? r : v;
  };
  p = {snap(p.x), snap(p.y)};
  if (!(p.x >= 0.0 && p.y >= 0.0 && p.x < img.width() && p.y < img.height())) {
    return std::nullopt;
  }
  const int x0 = static_cast<int>(p.x);
  const int y0 = static_cast<int>(p.y);
  const double fx = p.x - x0;
  const double fy = p.y - y0;
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const int xs[4] = {x0, x1, x0, x1};
  const int ys[4] = {y0, y0, y1, y1};
  const double ws[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy,
                        fx * fy};
  Rgb acc{0.0, 0.0, 0.0};
  double wsum = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (ws[k] == 0.0) continue;
    if (!img.covered(xs[k], ys[k])) continue;
    if (accept && !accept(xs[k], ys[k])) continue;
    for (int c = 0; c < 3; ++c) acc[c] += ws[k] * img.at(xs[k], ys[k], c);
    wsum += ws[k];
  }
  if (wsum <= 0.0) return std::nullopt;
  for (auto& v : acc) v /= wsum;
  return acc;
}

}  // namespace parastitch
