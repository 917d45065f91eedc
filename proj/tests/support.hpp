// Shared fixtures for the unit and acceptance tests.
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "parastitch/geometry.hpp"
#include "parastitch/image.hpp"
#include "parastitch/random.hpp"
#include "parastitch/segmentation.hpp"

namespace parastitch::testing {

// Mild projective map: rotation, anisotropic scale, shear, translation and a
// small projective row, so that it stays well conditioned on a 640 px image.
inline Homography random_homography(Rng& rng) {
  const double a = rng.uniform(-0.3, 0.3);
  Mat3 m;
  m << std::cos(a) * rng.uniform(0.8, 1.2), -std::sin(a) + rng.uniform(-0.1, 0.1),
      rng.uniform(-50, 50), std::sin(a) + rng.uniform(-0.1, 0.1),
      std::cos(a) * rng.uniform(0.8, 1.2), rng.uniform(-50, 50),
      rng.uniform(-3e-4, 3e-4), rng.uniform(-3e-4, 3e-4), 1.0;
  return Homography::from_matrix(m);
}

inline std::vector<Point2> random_points(Rng& rng, std::size_t n, double w = 640,
                                         double h = 480) {
  std::vector<Point2> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.uniform(0, w), rng.uniform(0, h)});
  return pts;
}

inline MatchSet matches_under(const Homography& h, const std::vector<Point2>& pts) {
  MatchSet out;
  for (const auto& p : pts) out.push_back({p, *h.apply(p)});
  return out;
}

// Largest entry difference after canonicalizing both matrices.
inline double canonical_distance(const Mat3& a, const Mat3& b) {
  return (canonicalize(a) - canonicalize(b)).cwiseAbs().maxCoeff();
}

template <typename Fn>
Image make_image(int w, int h, Fn fn) {
  Image img(w, h, true);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.set(x, y, fn(x, y));
  }
  return img;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("parastitch_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline LabelMap uniform_labels(int w, int h, std::uint32_t id) {
  return {w, h, std::vector<std::uint32_t>(static_cast<std::size_t>(w) * h, id)};
}

}  // namespace parastitch::testing
