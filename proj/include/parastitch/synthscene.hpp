#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "parastitch/geometry.hpp"
#include "parastitch/image.hpp"
#include "parastitch/segmentation.hpp"

namespace parastitch {

using Polygon = std::vector<Point2>;

struct PlaneSpec {
  Eigen::Vector3d normal{0.0, 0.0, 1.0};  // target camera frame
  double depth = 1000.0;                   // plane: normal . X = depth
  // Union of polygons in target pixels; empty means the whole plane.
  std::vector<Polygon> footprint;
  std::optional<std::size_t> match_count;  // overrides matches_per_plane
};

// Two pinhole cameras sharing intrinsics. A target-frame point X appears in
// the reference frame at R X + t, where R rolls about the optical axis.
struct SceneSpec {
  int width = 640;
  int height = 480;
  int ref_width = 640;
  int ref_height = 480;
  double focal = 800.0;
  double roll = 0.0;  // radians
  std::array<double, 3> baseline{-500.0, 0.0, 0.0};
  std::vector<PlaneSpec> planes;  // nearest first
  std::uint64_t seed = 1;
  std::size_t matches_per_plane = 150;
  double outlier_fraction = 0.0;
  double noise_sigma = 0.0;  // pixels, applied to reference points
};

enum class Visibility : std::uint8_t { kVisible = 0, kOccluded = 1, kOutside = 2 };

struct GroundTruth {
  std::vector<Homography> homographies;  // target -> reference, per plane
  std::vector<int> match_plane;          // -1 for injected outliers
  std::vector<std::uint8_t> is_outlier;
  std::vector<Point2> exact_ref;  // noise-free reference point (inliers)
  std::vector<int> target_plane;     // per target pixel
  std::vector<int> reference_plane;  // per reference pixel, -1 if empty
  std::vector<Point2> correspondence;  // per target pixel
  std::vector<Visibility> visibility;  // per target pixel
};

struct Scene {
  Image target;
  Image reference;
  MatchSet matches;
  LabelMap labels;  // plane index + 1 per target pixel
  GroundTruth gt;
};

Homography plane_homography(const SceneSpec& spec, const PlaneSpec& plane);

// Throws kInvalidSpec.
void validate_scene_spec(const SceneSpec& spec);
Scene generate(const SceneSpec& spec);

// Procedural texture of plane `index` at plane coordinate u, RGB in [0, 255].
Rgb plane_texture(std::uint64_t seed, std::size_t index, Point2 u);

bool point_in_polygon(const Polygon& poly, Point2 p);

// Presets. Parallax is produced by a horizontal baseline with planes at
// different depths.
SceneSpec preset_two_plane_occlusion(std::uint64_t seed = 1);
SceneSpec preset_three_plane(std::uint64_t seed = 1);
SceneSpec preset_interleaved(std::uint64_t seed = 1);
// Slanted background carrying most matches plus two foreground objects.
SceneSpec preset_parallax_pair(std::uint64_t seed = 1);
SceneSpec preset_by_name(const std::string& name, std::uint64_t seed);

// JSON scene description: optional "preset" name followed by overrides of
// any SceneSpec field. Throws kInvalidSpec.
SceneSpec parse_scene_spec(const std::string& json_text);
SceneSpec load_scene_spec(const std::filesystem::path& path);
std::string scene_spec_to_json(const SceneSpec& spec);

// Writes target.png, reference.png, matches.txt, labels.png,
// gt_occlusion.png and ground_truth.json into dir.
void write_scene(const Scene& scene, const SceneSpec& spec,
                 const std::filesystem::path& dir);

}  // namespace parastitch
