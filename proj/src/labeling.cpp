#include "parastitch/labeling.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "parastitch/error.hpp"
#include "parastitch/parallel.hpp"

namespace parastitch {

Homography global_homography(std::span<const FeatureMatch> matches) {
  require(matches.size() >= 4, ErrorCode::kDegenerateConfiguration,
          "global homography needs at least 4 matches");
  return refine_homography_lm(estimate_homography_dlt(matches), matches).h;
}

double photometric_error(std::span<const std::uint32_t> pixels,
                         const Homography& h, const Image& target,
                         const Image& reference) {
  double sum = 0.0;
  std::size_t count = 0;
  const int w = target.width();
  for (auto i : pixels) {
    const int x = static_cast<int>(i % w);
    const int y = static_cast<int>(i / w);
    if (!target.covered(x, y)) continue;
    const auto q = h.apply({static_cast<double>(x), static_cast<double>(y)});
    if (!q) continue;
    const auto r = sample_bilinear(reference, *q);
    if (!r) continue;
    double d2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double d = (*r)[c] - target.at(x, y, c);
      d2 += d * d;
    }
    sum += std::sqrt(d2);
    ++count;
  }
  return count == 0 ? kNoValidSample : sum / static_cast<double>(count);
}

namespace {

Point2 overlap_centroid(const OverlapContent& c, int width) {
  double sx = 0.0;
  double sy = 0.0;
  for (auto i : c.pixels) {
    sx += static_cast<double>(i % width);
    sy += static_cast<double>(i / width);
  }
  const double n = static_cast<double>(c.pixels.size());
  return {sx / n, sy / n};
}

}  // namespace

OverlapLabeling label_overlap_contents(const ContentPartition& partition,
                                       const OverlapMask& overlap,
                                       const ModelSet& models,
                                       const Homography& global_h,
                                       const Image& target,
                                       const Image& reference) {
  require(!models.models.empty(), ErrorCode::kPreconditionViolation,
          "labeling needs at least one model");
  require(partition.width() == target.width() &&
              partition.height() == target.height(),
          ErrorCode::kDimensionMismatch, "partition and target differ in size");
  OverlapLabeling out{global_h, models, {}, {}, {}};
  const auto& contents = overlap.overlap_contents;
  const std::size_t k_models = models.models.size();

  std::vector<double> errors(contents.size() * k_models);
  parallel_for(contents.size() * k_models, [&](std::size_t job) {
    const auto& c = contents[job / k_models];
    errors[job] = photometric_error(c.pixels, models.models[job % k_models],
                                    target, reference);
  });

  std::vector<Point2> centroids;
  std::vector<std::size_t> measured;
  std::vector<std::size_t> unmeasured;
  for (std::size_t c = 0; c < contents.size(); ++c) {
    centroids.push_back(overlap_centroid(contents[c], overlap.width));
    int best = -1;
    for (std::size_t k = 0; k < k_models; ++k) {
      const double e = errors[c * k_models + k];
      if (e == kNoValidSample) continue;
      if (best < 0 || e < errors[c * k_models + best]) best = static_cast<int>(k);
    }
    if (best < 0) {
      unmeasured.push_back(c);
      continue;
    }
    measured.push_back(c);
    out.content_label[contents[c].content_id] = best + 1;
    out.content_error[contents[c].content_id] = errors[c * k_models + best];
  }

  int fallback = 1;
  double fallback_dist = INFINITY;
  for (std::size_t k = 0; k < k_models; ++k) {
    const Mat3& a = models.models[k].matrix();
    const Mat3& g = global_h.matrix();
    const double d = std::min((a - g).norm(), (a + g).norm());
    if (d < fallback_dist) {
      fallback_dist = d;
      fallback = static_cast<int>(k) + 1;
    }
  }
  for (auto c : unmeasured) {
    int label = fallback;
    double best = INFINITY;
    for (auto m : measured) {
      const double d = distance(centroids[c], centroids[m]);
      if (d < best) {
        best = d;
        label = out.content_label[contents[m].content_id];
      }
    }
    out.content_label[contents[c].content_id] = label;
    out.content_error[contents[c].content_id] = kInheritedError;
    out.inherited.push_back(contents[c].content_id);
  }
  return out;
}

namespace {
constexpr double kAngleTie = 1e-9;
}  // namespace

Similarity select_similarity(const ModelSet& models, const Assignment& assign,
                             std::span<const FeatureMatch> matches) {
  require(assign.label.size() == matches.size(),
          ErrorCode::kPreconditionViolation,
          "assignment size differs from match count");
  std::optional<Similarity> best;
  std::size_t best_support = 0;
  std::vector<FeatureMatch> subset;
  for (std::size_t k = 1; k <= models.models.size(); ++k) {
    subset.clear();
    for (std::size_t i = 0; i < matches.size(); ++i) {
      if (assign.label[i] == static_cast<int>(k)) subset.push_back(matches[i]);
    }
    if (subset.size() < 2) continue;
    Similarity s;
    try {
      s = estimate_similarity(subset);
    } catch (const Error&) {
      continue;
    }
    // Angles closer than kAngleTie are indistinguishable at double
    // precision; the better supported model then wins.
    const double a = std::abs(s.angle);
    const double b = best ? std::abs(best->angle) : 0.0;
    if (!best || a < b - kAngleTie ||
        (std::abs(a - b) <= kAngleTie && subset.size() > best_support)) {
      best = s;
      best_support = subset.size();
    }
  }
  require(best.has_value(), ErrorCode::kDegenerateConfiguration,
          "no model has two matches to fit a similarity");
  return *best;
}

namespace {

// a*x + b*y + c >= 0
struct HalfPlane {
  double a, b, c;

  double eval(Point2 p) const { return a * p.x + b * p.y + c; }
};

std::vector<HalfPlane> reference_halfplanes(const OverlapMask& overlap,
                                            const Homography& h_g) {
  const Mat3& m = h_g.matrix();
  // Orient so that w > 0 on the overlap.
  double sign = 1.0;
  for (std::size_t i = 0; i < overlap.mask.size(); ++i) {
    if (!overlap.mask[i]) continue;
    const double x = static_cast<double>(i % overlap.width);
    const double y = static_cast<double>(i / overlap.width);
    sign = m(2, 0) * x + m(2, 1) * y + m(2, 2) < 0.0 ? -1.0 : 1.0;
    break;
  }
  auto row = [&](int r) {
    return HalfPlane{sign * m(r, 0), sign * m(r, 1), sign * m(r, 2)};
  };
  auto combo = [&](double s, const HalfPlane& w, const HalfPlane& v) {
    return HalfPlane{s * w.a - v.a, s * w.b - v.b, s * w.c - v.c};
  };
  const HalfPlane rx = row(0);
  const HalfPlane ry = row(1);
  const HalfPlane rw = row(2);
  return {rx, combo(overlap.ref_width, rw, rx), ry,
          combo(overlap.ref_height, rw, ry), rw};
}

// Polygon vertex with the tag of the edge leaving it: -1 for the target
// border, otherwise the clipping half-plane.
struct TaggedVertex {
  Point2 p;
  int tag;
};

std::vector<TaggedVertex> clip_target(const OverlapMask& overlap,
                                      const std::vector<HalfPlane>& planes) {
  const double w = overlap.width - 1;
  const double h = overlap.height - 1;
  std::vector<TaggedVertex> poly = {
      {{0, 0}, -1}, {{w, 0}, -1}, {{w, h}, -1}, {{0, h}, -1}};
  for (std::size_t k = 0; k < planes.size(); ++k) {
    const auto& hp = planes[k];
    std::vector<TaggedVertex> next;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const auto& a = poly[i];
      const auto& b = poly[(i + 1) % poly.size()];
      const double fa = hp.eval(a.p);
      const double fb = hp.eval(b.p);
      const bool ina = fa >= 0.0;
      const bool inb = fb >= 0.0;
      if (ina) next.push_back(a);
      if (ina != inb) {
        const double t = fa / (fa - fb);
        const Point2 cross = a.p + t * (b.p - a.p);
        next.push_back({cross, ina ? static_cast<int>(k) : a.tag});
      }
    }
    poly = std::move(next);
    if (poly.empty()) break;
  }
  // Drop zero-length edges left by vertices lying on a clipping line.
  std::vector<TaggedVertex> out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& b = poly[(i + 1) % poly.size()];
    if (distance(poly[i].p, b.p) > 1e-9) out.push_back(poly[i]);
  }
  return out;
}

struct Segment {
  Point2 a, b;
  double length() const { return distance(a, b); }
};

std::vector<Point2> spread_along(const std::vector<Segment>& path, int count) {
  double total = 0.0;
  for (const auto& s : path) total += s.length();
  std::vector<Point2> out;
  if (total <= 0.0) return out;
  std::size_t seg = 0;
  double before = 0.0;
  for (int i = 0; i < count; ++i) {
    const double target = (i + 0.5) * total / count;
    while (seg + 1 < path.size() && before + path[seg].length() < target) {
      before += path[seg].length();
      ++seg;
    }
    const double len = path[seg].length();
    const double t = len > 0.0 ? std::clamp((target - before) / len, 0.0, 1.0)
                               : 0.0;
    out.push_back(path[seg].a + t * (path[seg].b - path[seg].a));
  }
  return out;
}

}  // namespace

std::vector<Point2> overlap_polygon(const OverlapMask& overlap,
                                    const Homography& h_g) {
  std::vector<Point2> out;
  for (const auto& v : clip_target(overlap, reference_halfplanes(overlap, h_g))) {
    out.push_back(v.p);
  }
  return out;
}

AnchorSet sample_anchors(const OverlapMask& overlap,
                         const OverlapLabeling& labeling,
                         const Similarity& similarity, int r1, int r2,
                         double nu) {
  require(r1 >= 1 && r2 >= 1, ErrorCode::kPreconditionViolation,
          "anchor counts must be positive");
  require(nu > 0.0, ErrorCode::kPreconditionViolation, "nu must be positive");
  require(overlap.overlap_pixel_count() < overlap.mask.size(),
          ErrorCode::kEmptyRegion, "the overlap covers the whole target");

  const auto planes = reference_halfplanes(overlap, labeling.global_h);
  const auto poly = clip_target(overlap, planes);

  std::vector<Segment> interface;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (poly[i].tag >= 0) {
      interface.push_back({poly[i].p, poly[(i + 1) % poly.size()].p});
    }
  }

  // Target border minus its part inside the overlap polygon.
  const double w = overlap.width - 1;
  const double h = overlap.height - 1;
  const Point2 corners[4] = {{0, 0}, {w, 0}, {w, h}, {0, h}};
  std::vector<Segment> border;
  for (int e = 0; e < 4; ++e) {
    const Point2 a = corners[e];
    const Point2 b = corners[(e + 1) % 4];
    double t0 = 0.0;
    double t1 = 1.0;
    for (const auto& hp : planes) {
      const double fa = hp.eval(a);
      const double fb = hp.eval(b);
      if (fa < 0.0 && fb < 0.0) {
        t0 = 1.0;
        t1 = 0.0;
        break;
      }
      if (fa < 0.0) t0 = std::max(t0, fa / (fa - fb));
      if (fb < 0.0) t1 = std::min(t1, fa / (fa - fb));
    }
    if (t0 >= t1) {
      border.push_back({a, b});
      continue;
    }
    if (t0 > 0.0) border.push_back({a, a + t0 * (b - a)});
    if (t1 < 1.0) border.push_back({a + t1 * (b - a), b});
  }

  // Per-pixel labels of the overlap for the nearest-pixel lookup.
  std::vector<int> pixel_label(overlap.mask.size(), 0);
  for (const auto& c : overlap.overlap_contents) {
    const int label = labeling.content_label.at(c.content_id);
    for (auto i : c.pixels) pixel_label[i] = label;
  }
  auto nearest_label = [&](Point2 p) {
    const int cx = std::clamp(static_cast<int>(std::lround(p.x)), 0, overlap.width - 1);
    const int cy = std::clamp(static_cast<int>(std::lround(p.y)), 0, overlap.height - 1);
    const int max_r = std::max(overlap.width, overlap.height);
    for (int r = 0; r <= max_r; ++r) {
      int label = 0;
      double best = INFINITY;
      for (int y = cy - r; y <= cy + r; ++y) {
        for (int x = cx - r; x <= cx + r; ++x) {
          if (std::max(std::abs(x - cx), std::abs(y - cy)) != r) continue;
          if (x < 0 || y < 0 || x >= overlap.width || y >= overlap.height) continue;
          const int l = pixel_label[static_cast<std::size_t>(y) * overlap.width + x];
          if (l == 0) continue;
          const double d = distance(p, {static_cast<double>(x), static_cast<double>(y)});
          if (d < best) {
            best = d;
            label = l;
          }
        }
      }
      if (label != 0) return label;
    }
    fail(ErrorCode::kEmptyRegion, "overlap has no labeled pixel");
  };

  AnchorSet out;
  out.similarity = similarity;
  out.nu = nu;
  for (const auto& p : spread_along(interface, r1)) {
    OverlapAnchor a;
    a.pos = p;
    a.label = nearest_label(p);
    const auto& hk = labeling.models.models[a.label - 1];
    const auto mapped = hk.apply(p);
    require(mapped.has_value(), ErrorCode::kPointAtInfinity,
            "anchor maps to infinity");
    a.mapped = *mapped;
    a.jacobian = homography_point_jacobian(hk, p);
    out.overlap_anchors.push_back(a);
  }
  out.outer_anchors = spread_along(border, r2);
  require(!out.overlap_anchors.empty() && !out.outer_anchors.empty(),
          ErrorCode::kEmptyRegion, "anchor boundary has zero length");
  return out;
}

double student_t_weight(double squared_distance, double nu) {
  return std::pow(1.0 + squared_distance / nu, -(nu + 1.0) / 2.0);
}

AnchorWeights anchor_weights(const AnchorSet& anchors, Point2 v) {
  AnchorWeights w;
  double sum = 0.0;
  auto weight = [&](Point2 a) {
    const Point2 d = v - a;
    const double value = student_t_weight(d.x * d.x + d.y * d.y, anchors.nu);
    sum += value;
    return value;
  };
  for (const auto& a : anchors.overlap_anchors) w.overlap.push_back(weight(a.pos));
  for (const auto& b : anchors.outer_anchors) w.outer.push_back(weight(b));
  require(sum > 0.0, ErrorCode::kPreconditionViolation,
          "anchor weights underflow");
  for (auto& x : w.overlap) x /= sum;
  for (auto& x : w.outer) x /= sum;
  return w;
}

Point2 extrapolate(const AnchorSet& anchors, Point2 v) {
  const auto w = anchor_weights(anchors, v);
  const Mat2 js = anchors.similarity.jacobian();
  Eigen::Vector2d acc(0.0, 0.0);
  for (std::size_t i = 0; i < anchors.overlap_anchors.size(); ++i) {
    const auto& a = anchors.overlap_anchors[i];
    const Eigen::Vector2d d(v.x - a.pos.x, v.y - a.pos.y);
    acc += w.overlap[i] * (Eigen::Vector2d(a.mapped.x, a.mapped.y) + a.jacobian * d);
  }
  for (std::size_t j = 0; j < anchors.outer_anchors.size(); ++j) {
    const Point2 b = anchors.outer_anchors[j];
    const Point2 sb = anchors.similarity.apply(b);
    const Eigen::Vector2d d(v.x - b.x, v.y - b.y);
    acc += w.outer[j] * (Eigen::Vector2d(sb.x, sb.y) + js * d);
  }
  return {acc.x(), acc.y()};
}

Point2 NonOverlapMesh::map_in_triangle(std::size_t t, Point2 p) const {
  const auto& tri = triangles[t];
  const Point2 a = source[tri.v[0]];
  const Point2 b = source[tri.v[1]];
  const Point2 c = source[tri.v[2]];
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  const double l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
  const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
  const double l0 = 1.0 - l1 - l2;
  const Point2 wa = warped[tri.v[0]];
  const Point2 wb = warped[tri.v[1]];
  const Point2 wc = warped[tri.v[2]];
  return {l0 * wa.x + l1 * wb.x + l2 * wc.x, l0 * wa.y + l1 * wb.y + l2 * wc.y};
}

NonOverlapMesh build_nonoverlap_mesh(const OverlapMask& overlap,
                                     const AnchorSet& anchors, int cell_size) {
  require(cell_size >= 1, ErrorCode::kPreconditionViolation,
          "cell size must be positive");
  int x0 = overlap.width;
  int y0 = overlap.height;
  int x1 = -1;
  int y1 = -1;
  for (int y = 0; y < overlap.height; ++y) {
    for (int x = 0; x < overlap.width; ++x) {
      if (overlap.in_overlap(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  require(x1 >= 0, ErrorCode::kEmptyRegion, "the overlap covers the whole target");

  NonOverlapMesh mesh;
  mesh.cell_size = cell_size;
  mesh.origin = {static_cast<double>(x0), static_cast<double>(y0)};
  mesh.cols = (x1 - x0) / cell_size + 1;
  mesh.rows = (y1 - y0) / cell_size + 1;
  mesh.cell_used.assign(static_cast<std::size_t>(mesh.rows) * mesh.cols, 0);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (overlap.in_overlap(x, y)) continue;
      const int i = (x - x0) / cell_size;
      const int j = (y - y0) / cell_size;
      mesh.cell_used[static_cast<std::size_t>(j) * mesh.cols + i] = 1;
    }
  }
  const std::size_t nv = static_cast<std::size_t>(mesh.cols + 1) * (mesh.rows + 1);
  mesh.source.resize(nv);
  mesh.warped.resize(nv);
  for (int j = 0; j <= mesh.rows; ++j) {
    for (int i = 0; i <= mesh.cols; ++i) {
      mesh.source[mesh.vertex_index(i, j)] = {x0 + static_cast<double>(i) * cell_size,
                                              y0 + static_cast<double>(j) * cell_size};
    }
  }
  parallel_for(nv, [&](std::size_t v) {
    mesh.warped[v] = extrapolate(anchors, mesh.source[v]);
  });
  for (int j = 0; j < mesh.rows; ++j) {
    for (int i = 0; i < mesh.cols; ++i) {
      if (!mesh.cell_used[static_cast<std::size_t>(j) * mesh.cols + i]) continue;
      const auto v00 = mesh.vertex_index(i, j);
      const auto v10 = mesh.vertex_index(i + 1, j);
      const auto v11 = mesh.vertex_index(i + 1, j + 1);
      const auto v01 = mesh.vertex_index(i, j + 1);
      mesh.triangles.push_back({{v00, v10, v11}});
      mesh.triangles.push_back({{v00, v11, v01}});
    }
  }
  return mesh;
}

}  // namespace parastitch
