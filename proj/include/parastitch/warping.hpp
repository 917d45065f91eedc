#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "parastitch/image.hpp"
#include "parastitch/labeling.hpp"
#include "parastitch/segmentation.hpp"

namespace parastitch {

inline constexpr int kMaxCanvasSide = 20000;

// Output frame in reference pixel coordinates. Canvas pixel (cx, cy) is the
// reference coordinate (cx + x0, cy + y0).
struct Canvas {
  int x0 = 0;
  int y0 = 0;
  int width = 0;
  int height = 0;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * height;
  }
  std::size_t index(int cx, int cy) const {
    return static_cast<std::size_t>(cy) * width + cx;
  }
  Point2 to_reference(int cx, int cy) const {
    return {static_cast<double>(cx + x0), static_cast<double>(cy + y0)};
  }
  Point2 offset() const {
    return {static_cast<double>(-x0), static_cast<double>(-y0)};
  }
};

// Integer hull of the reference rectangle, each overlap content's bounding box
// corners mapped by its label, and the warped mesh vertices (mesh may be
// null). Points within 1e-6 px past a grid line do not widen it. Throws
// kCanvasOverflow beyond kMaxCanvasSide.
Canvas compute_canvas(int ref_width, int ref_height, const OverlapMask& overlap,
                      const OverlapLabeling& labeling,
                      const NonOverlapMesh* mesh);

struct ErrorBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> best_error;  // +inf where unclaimed
  std::vector<std::uint32_t> owner;  // content id, 0 = none
  std::vector<std::uint16_t> claims;  // contents whose footprint covers the pixel
};

struct WarpReport {
  std::size_t claimed_pixels = 0;
  std::size_t conflict_pixels = 0;
  std::size_t hole_pixels = 0;
};

// Canvas pixels (ascending linear index) covered by content `id` under
// homography h: forward-mapped pixel centers dilated by one pixel, each
// candidate kept iff its back-projection rounds to a pixel of the content
// inside the overlap.
std::vector<std::uint32_t> content_footprint(std::uint32_t id,
                                             const Homography& h,
                                             const ContentPartition& partition,
                                             const OverlapMask& overlap,
                                             const Canvas& canvas);

struct ClaimResult {
  ErrorBuffer buffer;
  WarpReport report;
};

// Merges footprints in ascending content id. With the error buffer a content
// takes a pixel iff its content error is strictly below the current best;
// without it the last writer wins.
ClaimResult forward_claim(const OverlapLabeling& labeling,
                          const ContentPartition& partition,
                          const OverlapMask& overlap, const Canvas& canvas,
                          bool use_error_buffer = true);

struct RenderedTarget {
  Image image;  // canvas sized; coverage = owned or mesh-rendered
  std::vector<std::uint8_t> from_mesh;
};

// Owned pixels sample the target through the owner's inverse homography using
// only taps of the owning content. Remaining pixels are rendered through the
// mesh triangles when their preimage is a non-overlap target pixel.
RenderedTarget backward_render(const ErrorBuffer& buffer,
                               const OverlapLabeling& labeling,
                               const ContentPartition& partition,
                               const OverlapMask& overlap,
                               const NonOverlapMesh* mesh, const Image& target,
                               const Canvas& canvas);

Image place_on_canvas(const Image& reference, const Canvas& canvas);

// Distance from each covered pixel center to the nearest uncovered pixel
// center, treating everything outside the image as uncovered. 0 on uncovered.
std::vector<double> coverage_distance(const Image& img);

enum class BlendMode { kFeather, kConstant };

Image blend_linear(const Image& warped_target, const Image& reference_on_canvas,
                   BlendMode mode = BlendMode::kFeather);

}  // namespace parastitch
