#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "parastitch/geometry.hpp"

namespace parastitch {

// Raw segmentation ids per target pixel; 0 = unassigned.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> labels;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

// 16-bit single-channel PNG. Throws kDimensionMismatch when the raster size
// differs from the expected target size, kDecodeError on malformed files.
LabelMap load_label_map(const std::filesystem::path& path, int expected_width,
                        int expected_height);
void save_label_map(const std::filesystem::path& path, const LabelMap& map);

struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;  // inclusive
  int y1 = -1;
};

struct Content {
  std::uint32_t id = 0;
  std::vector<std::uint32_t> pixels;  // linear indices y * width + x, ascending
  PixelRect bbox;

  std::size_t area() const { return pixels.size(); }
};

// Disjoint cover of the target image by contents with ids 1..M.
class ContentPartition {
 public:
  ContentPartition(int width, int height,
                   std::vector<std::uint32_t> pixel_to_content);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t count() const { return contents_.size(); }
  const std::vector<Content>& contents() const { return contents_; }
  const Content& content(std::uint32_t id) const { return contents_[id - 1]; }
  std::uint32_t content_at(int x, int y) const {
    return pixel_to_content_[static_cast<std::size_t>(y) * width_ + x];
  }
  const std::vector<std::uint32_t>& pixel_to_content() const {
    return pixel_to_content_;
  }
  Point2 centroid(std::uint32_t id) const;

 private:
  int width_;
  int height_;
  std::vector<std::uint32_t> pixel_to_content_;
  std::vector<Content> contents_;
};

// Unassigned pixels become one content per 4-connected component, every raw id
// one content, then contents under min_content_area pixels are merged into the
// neighbor sharing the longest boundary. Final ids follow first appearance in
// raster order.
ContentPartition normalize_partition(const LabelMap& raw,
                                     std::size_t min_content_area = 64);

struct OverlapContent {
  std::uint32_t content_id = 0;
  std::vector<std::uint32_t> pixels;  // C_k intersected with the overlap
};

struct OverlapMask {
  int width = 0;
  int height = 0;
  int ref_width = 0;
  int ref_height = 0;
  std::vector<std::uint8_t> mask;
  std::vector<OverlapContent> overlap_contents;  // ascending content id

  bool in_overlap(int x, int y) const {
    return mask[static_cast<std::size_t>(y) * width + x] != 0;
  }
  bool in_overlap(Point2 p) const;  // floor convention, false outside
  std::size_t overlap_pixel_count() const;
};

// A target pixel p is in the overlap iff dehomogenize(h_g p~) lies in
// [-1e-9, ref_width - 1e-9) x [-1e-9, ref_height - 1e-9). Throws
// kEmptyOverlap if none does.
OverlapMask compute_overlap(const ContentPartition& partition,
                            const Homography& h_g, int ref_width,
                            int ref_height);

// Content of the pixel containing each target point (floor of coordinates).
// Out-of-bounds points get id 0 and are reported through `dropped`.
std::vector<std::uint32_t> assign_points_to_contents(
    const ContentPartition& partition, std::span<const FeatureMatch> matches,
    std::vector<std::size_t>* dropped = nullptr);

}  // namespace parastitch
