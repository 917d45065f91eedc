#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "parastitch/geometry.hpp"
#include "parastitch/image.hpp"
#include "parastitch/multifit.hpp"
#include "parastitch/segmentation.hpp"

namespace parastitch {

// DLT followed by LM over every match. Throws kDegenerateConfiguration.
Homography global_homography(std::span<const FeatureMatch> matches);

inline constexpr double kNoValidSample = std::numeric_limits<double>::infinity();

// Mean RGB L2 distance between I_t(p) and bilinear I_r(h(p)) over the given
// target pixels (linear indices). Pixels landing outside the reference or on
// uncovered reference texture are skipped; kNoValidSample if none remain.
double photometric_error(std::span<const std::uint32_t> pixels,
                         const Homography& h, const Image& target,
                         const Image& reference);

// Content error recorded for a content whose label was inherited. It never
// wins a conflict against a measured content but still claims free pixels.
inline constexpr double kInheritedError = std::numeric_limits<double>::max();

struct OverlapLabeling {
  Homography global_h;
  ModelSet models;
  // Overlap content id -> model label (1-based, never the outlier label).
  std::map<std::uint32_t, int> content_label;
  std::map<std::uint32_t, double> content_error;
  std::vector<std::uint32_t> inherited;  // ids labeled by the fallback rule

  const Homography& homography_of(std::uint32_t content_id) const {
    return models.models[content_label.at(content_id) - 1];
  }
};

// Photometric argmin per overlap content (ties to the lowest label). Contents
// without a valid sample take the label of the nearest measured content by
// centroid distance, or the model closest to global_h if none was measured.
OverlapLabeling label_overlap_contents(const ContentPartition& partition,
                                       const OverlapMask& overlap,
                                       const ModelSet& models,
                                       const Homography& global_h,
                                       const Image& target,
                                       const Image& reference);

// Per-model least-squares similarity on the assigned matches; returns the one
// with the smallest |angle|. Angles within 1e-9 rad count as equal and go to
// the model with more assigned matches, then the lower label. Throws
// kDegenerateConfiguration when no model has two or more matches.
Similarity select_similarity(const ModelSet& models, const Assignment& assign,
                             std::span<const FeatureMatch> matches);

struct OverlapAnchor {
  Point2 pos;
  int label = 1;
  Point2 mapped;  // h(pos)
  Mat2 jacobian;  // of h at pos
};

struct AnchorSet {
  std::vector<OverlapAnchor> overlap_anchors;  // along the overlap interface
  std::vector<Point2> outer_anchors;  // along the non-overlap image border
  Similarity similarity;
  double nu = 5.0;
};

// Convex overlap polygon: the target rectangle [0, w-1] x [0, h-1] clipped
// to the preimage of the reference frame under h_g. Counter-clockwise.
std::vector<Point2> overlap_polygon(const OverlapMask& overlap,
                                    const Homography& h_g);

// Throws kPreconditionViolation when r1 or r2 is below 1 and kEmptyRegion when
// the overlap covers the whole target.
AnchorSet sample_anchors(const OverlapMask& overlap,
                         const OverlapLabeling& labeling,
                         const Similarity& similarity, int r1, int r2,
                         double nu = 5.0);

// Student's t weight of a squared distance.
double student_t_weight(double squared_distance, double nu);

struct AnchorWeights {
  std::vector<double> overlap;
  std::vector<double> outer;
};

// Weights over all anchors at v, normalized to sum to 1.
AnchorWeights anchor_weights(const AnchorSet& anchors, Point2 v);

// Blended linearization at v: weighted first-order expansions of the anchor
// homographies plus the similarity.
Point2 extrapolate(const AnchorSet& anchors, Point2 v);

struct MeshTriangle {
  std::array<std::size_t, 3> v;  // vertex indices
};

// Regular grid over the bounding box of the non-overlap pixels. Vertex (i, j)
// sits at origin + cell_size * (i, j); each included cell is split along its
// (i, j)-(i+1, j+1) diagonal.
struct NonOverlapMesh {
  int cell_size = 20;
  Point2 origin;
  int cols = 0;  // cells per row
  int rows = 0;
  std::vector<Point2> source;  // (cols + 1) * (rows + 1) grid positions
  std::vector<Point2> warped;
  std::vector<std::uint8_t> cell_used;  // rows * cols
  std::vector<MeshTriangle> triangles;

  bool empty() const { return triangles.empty(); }
  std::size_t vertex_index(int i, int j) const {
    return static_cast<std::size_t>(j) * (cols + 1) + i;
  }
  // Affine map of triangle t evaluated at a target point.
  Point2 map_in_triangle(std::size_t t, Point2 p) const;
};

// Throws kEmptyRegion when every target pixel is in the overlap.
NonOverlapMesh build_nonoverlap_mesh(const OverlapMask& overlap,
                                     const AnchorSet& anchors, int cell_size);

}  // namespace parastitch
