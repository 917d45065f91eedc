#include "parastitch/warping.hpp"

#include <algorithm>
#include <cmath>

#include "parastitch/error.hpp"
#include "parastitch/parallel.hpp"

namespace parastitch {

namespace {

PixelRect overlap_bbox(const OverlapContent& c, int width) {
  PixelRect r{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
              -1, -1};
  for (auto i : c.pixels) {
    const int x = static_cast<int>(i % width);
    const int y = static_cast<int>(i / width);
    r.x0 = std::min(r.x0, x);
    r.y0 = std::min(r.y0, y);
    r.x1 = std::max(r.x1, x);
    r.y1 = std::max(r.y1, y);
  }
  return r;
}

}  // namespace

Canvas compute_canvas(int ref_width, int ref_height, const OverlapMask& overlap,
                      const OverlapLabeling& labeling,
                      const NonOverlapMesh* mesh) {
  double lo_x = 0.0;
  double lo_y = 0.0;
  double hi_x = ref_width - 1;
  double hi_y = ref_height - 1;
  auto include = [&](Point2 p) {
    lo_x = std::min(lo_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_x = std::max(hi_x, p.x);
    hi_y = std::max(hi_y, p.y);
  };
  for (const auto& c : overlap.overlap_contents) {
    const auto& h = labeling.homography_of(c.content_id);
    const auto box = overlap_bbox(c, overlap.width);
    const Point2 corners[4] = {{static_cast<double>(box.x0), static_cast<double>(box.y0)},
                               {static_cast<double>(box.x1), static_cast<double>(box.y0)},
                               {static_cast<double>(box.x1), static_cast<double>(box.y1)},
                               {static_cast<double>(box.x0), static_cast<double>(box.y1)}};
    for (const auto& p : corners) {
      const auto q = h.apply(p);
      require(q.has_value(), ErrorCode::kCanvasOverflow,
              "content corner maps to infinity");
      include(*q);
    }
  }
  if (mesh) {
    for (const auto& t : mesh->triangles) {
      for (auto v : t.v) include(mesh->warped[v]);
    }
  }
  // Fitted models land integer corners a hair off the grid; do not grow the
  // canvas for that.
  constexpr double kSlack = 1e-6;
  lo_x = std::floor(lo_x + kSlack);
  lo_y = std::floor(lo_y + kSlack);
  hi_x = std::ceil(hi_x - kSlack);
  hi_y = std::ceil(hi_y - kSlack);
  const double span_x = hi_x - lo_x + 1.0;
  const double span_y = hi_y - lo_y + 1.0;
  require(std::isfinite(span_x) && std::isfinite(span_y) &&
              span_x <= kMaxCanvasSide && span_y <= kMaxCanvasSide,
          ErrorCode::kCanvasOverflow,
          "canvas would exceed " + std::to_string(kMaxCanvasSide) + " px");
  Canvas c;
  c.x0 = static_cast<int>(lo_x);
  c.y0 = static_cast<int>(lo_y);
  c.width = static_cast<int>(span_x);
  c.height = static_cast<int>(span_y);
  return c;
}

std::vector<std::uint32_t> content_footprint(std::uint32_t id,
                                             const Homography& h,
                                             const ContentPartition& partition,
                                             const OverlapMask& overlap,
                                             const Canvas& canvas) {
  const OverlapContent* content = nullptr;
  for (const auto& c : overlap.overlap_contents) {
    if (c.content_id == id) content = &c;
  }
  if (!content || content->pixels.empty()) return {};

  const int w = overlap.width;
  std::vector<std::pair<int, int>> centers;
  centers.reserve(content->pixels.size());
  int bx0 = canvas.width, by0 = canvas.height, bx1 = -1, by1 = -1;
  for (auto i : content->pixels) {
    const auto q = h.apply({static_cast<double>(i % w), static_cast<double>(i / w)});
    if (!q) continue;
    const double fx = std::round(q->x) - canvas.x0;
    const double fy = std::round(q->y) - canvas.y0;
    if (fx < -1 || fy < -1 || fx > canvas.width || fy > canvas.height) continue;
    const int cx = static_cast<int>(fx);
    const int cy = static_cast<int>(fy);
    centers.emplace_back(cx, cy);
    bx0 = std::min(bx0, cx - 1);
    by0 = std::min(by0, cy - 1);
    bx1 = std::max(bx1, cx + 1);
    by1 = std::max(by1, cy + 1);
  }
  if (centers.empty()) return {};
  bx0 = std::max(bx0, 0);
  by0 = std::max(by0, 0);
  bx1 = std::min(bx1, canvas.width - 1);
  by1 = std::min(by1, canvas.height - 1);
  if (bx0 > bx1 || by0 > by1) return {};
  const int lw = bx1 - bx0 + 1;
  const int lh = by1 - by0 + 1;
  std::vector<std::uint8_t> candidate(static_cast<std::size_t>(lw) * lh, 0);
  for (const auto& [cx, cy] : centers) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = cx + dx;
        const int y = cy + dy;
        if (x < bx0 || y < by0 || x > bx1 || y > by1) continue;
        candidate[static_cast<std::size_t>(y - by0) * lw + (x - bx0)] = 1;
      }
    }
  }
  std::vector<std::uint32_t> out;
  for (int y = 0; y < lh; ++y) {
    for (int x = 0; x < lw; ++x) {
      if (!candidate[static_cast<std::size_t>(y) * lw + x]) continue;
      const int cx = x + bx0;
      const int cy = y + by0;
      const auto p = h.apply_inverse(canvas.to_reference(cx, cy));
      if (!p) continue;
      const double px = std::round(p->x);
      const double py = std::round(p->y);
      if (px < 0 || py < 0 || px >= overlap.width || py >= overlap.height) continue;
      const int ix = static_cast<int>(px);
      const int iy = static_cast<int>(py);
      if (!overlap.in_overlap(ix, iy) || partition.content_at(ix, iy) != id) continue;
      out.push_back(static_cast<std::uint32_t>(canvas.index(cx, cy)));
    }
  }
  return out;
}

ClaimResult forward_claim(const OverlapLabeling& labeling,
                          const ContentPartition& partition,
                          const OverlapMask& overlap, const Canvas& canvas,
                          bool use_error_buffer) {
  const auto& contents = overlap.overlap_contents;
  std::vector<std::vector<std::uint32_t>> footprints(contents.size());
  parallel_for(contents.size(), [&](std::size_t k) {
    const auto id = contents[k].content_id;
    footprints[k] = content_footprint(id, labeling.homography_of(id), partition,
                                      overlap, canvas);
  });

  ClaimResult r;
  auto& buf = r.buffer;
  buf.width = canvas.width;
  buf.height = canvas.height;
  buf.best_error.assign(canvas.pixel_count(), std::numeric_limits<double>::infinity());
  buf.owner.assign(canvas.pixel_count(), 0);
  buf.claims.assign(canvas.pixel_count(), 0);
  for (std::size_t k = 0; k < contents.size(); ++k) {
    const auto id = contents[k].content_id;
    const double err = labeling.content_error.at(id);
    for (auto px : footprints[k]) {
      if (buf.claims[px] < UINT16_MAX) ++buf.claims[px];
      if (!use_error_buffer || err < buf.best_error[px]) {
        buf.best_error[px] = err;
        buf.owner[px] = id;
      }
    }
  }

  const auto& hg = labeling.global_h;
  for (int cy = 0; cy < canvas.height; ++cy) {
    for (int cx = 0; cx < canvas.width; ++cx) {
      const auto i = canvas.index(cx, cy);
      if (buf.owner[i] != 0) ++r.report.claimed_pixels;
      if (buf.claims[i] >= 2) ++r.report.conflict_pixels;
      if (buf.owner[i] != 0) continue;
      const Point2 q = canvas.to_reference(cx, cy);
      if (q.x < 0 || q.y < 0 || q.x >= overlap.ref_width || q.y >= overlap.ref_height) {
        continue;
      }
      const auto p = hg.apply_inverse(q);
      if (!p) continue;
      const double px = std::round(p->x);
      const double py = std::round(p->y);
      if (px >= 0 && py >= 0 && px < overlap.width && py < overlap.height &&
          overlap.in_overlap(static_cast<int>(px), static_cast<int>(py))) {
        ++r.report.hole_pixels;
      }
    }
  }
  return r;
}

RenderedTarget backward_render(const ErrorBuffer& buffer,
                               const OverlapLabeling& labeling,
                               const ContentPartition& partition,
                               const OverlapMask& overlap,
                               const NonOverlapMesh* mesh, const Image& target,
                               const Canvas& canvas) {
  require(buffer.width == canvas.width && buffer.height == canvas.height,
          ErrorCode::kDimensionMismatch, "error buffer does not match canvas");
  RenderedTarget out{Image(canvas.width, canvas.height, false),
                     std::vector<std::uint8_t>(canvas.pixel_count(), 0)};
  Image& img = out.image;

  parallel_for(static_cast<std::size_t>(canvas.height), [&](std::size_t row) {
    const int cy = static_cast<int>(row);
    for (int cx = 0; cx < canvas.width; ++cx) {
      const auto owner = buffer.owner[canvas.index(cx, cy)];
      if (owner == 0) continue;
      const auto p = labeling.homography_of(owner).apply_inverse(
          canvas.to_reference(cx, cy));
      require(p.has_value(), ErrorCode::kSingularMap,
              "owned pixel has no preimage");
      const auto v = sample_bilinear(target, *p, [&](int x, int y) {
        return partition.content_at(x, y) == owner;
      });
      if (!v) continue;
      img.set(cx, cy, *v);
      img.set_covered(cx, cy, true);
    }
  });

  if (!mesh) return out;
  for (std::size_t t = 0; t < mesh->triangles.size(); ++t) {
    const auto& tri = mesh->triangles[t];
    Point2 w[3];
    Point2 s[3];
    for (int k = 0; k < 3; ++k) {
      w[k] = mesh->warped[tri.v[k]] + canvas.offset();
      s[k] = mesh->source[tri.v[k]];
    }
    const double det = (w[1].x - w[0].x) * (w[2].y - w[0].y) -
                       (w[2].x - w[0].x) * (w[1].y - w[0].y);
    if (std::abs(det) < 1e-12) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({w[0].x, w[1].x, w[2].x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({w[0].y, w[1].y, w[2].y}))));
    const int x1 = std::min(canvas.width - 1, static_cast<int>(std::ceil(std::max({w[0].x, w[1].x, w[2].x}))));
    const int y1 = std::min(canvas.height - 1, static_cast<int>(std::ceil(std::max({w[0].y, w[1].y, w[2].y}))));
    for (int cy = y0; cy <= y1; ++cy) {
      for (int cx = x0; cx <= x1; ++cx) {
        const auto i = canvas.index(cx, cy);
        if (buffer.owner[i] != 0 || img.covered(cx, cy)) continue;
        const double l1 = ((cx - w[0].x) * (w[2].y - w[0].y) - (w[2].x - w[0].x) * (cy - w[0].y)) / det;
        const double l2 = ((w[1].x - w[0].x) * (cy - w[0].y) - (cx - w[0].x) * (w[1].y - w[0].y)) / det;
        const double l0 = 1.0 - l1 - l2;
        constexpr double kEdge = -1e-9;
        if (l0 < kEdge || l1 < kEdge || l2 < kEdge) continue;
        const Point2 src{l0 * s[0].x + l1 * s[1].x + l2 * s[2].x,
                         l0 * s[0].y + l1 * s[1].y + l2 * s[2].y};
        const double rx = std::round(src.x);
        const double ry = std::round(src.y);
        if (rx < 0 || ry < 0 || rx >= target.width() || ry >= target.height()) continue;
        if (overlap.in_overlap(static_cast<int>(rx), static_cast<int>(ry))) continue;
        const auto v = sample_bilinear(target, src);
        if (!v) continue;
        img.set(cx, cy, *v);
        img.set_covered(cx, cy, true);
        out.from_mesh[i] = 1;
      }
    }
  }
  return out;
}

Image place_on_canvas(const Image& reference, const Canvas& canvas) {
  Image out(canvas.width, canvas.height, false);
  for (int y = 0; y < reference.height(); ++y) {
    for (int x = 0; x < reference.width(); ++x) {
      const int cx = x - canvas.x0;
      const int cy = y - canvas.y0;
      if (!out.contains(cx, cy) || !reference.covered(x, y)) continue;
      for (int c = 0; c < 3; ++c) out.at(cx, cy, c) = reference.at(x, y, c);
      out.set_covered(cx, cy, true);
    }
  }
  return out;
}

namespace {

// Squared 1-D distance transform of f (Felzenszwalb-Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& d,
            std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[k]] == kInf) {
      v[k] = q;
      continue;
    }
    double s;
    while (true) {
      s = ((f[q] + static_cast<double>(q) * q) -
           (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
          (2.0 * (q - v[k]));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = f[v[k]] == kInf ? kInf : dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<double> coverage_distance(const Image& img) {
  // One-pixel uncovered frame so the image border counts as uncovered.
  const int w = img.width() + 2;
  const int h = img.height() + 2;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> g(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.covered(x, y)) g[static_cast<std::size_t>(y + 1) * w + x + 1] = kInf;
    }
  }
  std::vector<double> f, d;
  std::vector<int> v;
  std::vector<double> z;
  auto pass = [&](int n) {
    f.assign(n, 0.0);
    d.assign(n, 0.0);
    v.assign(n, 0);
    z.assign(n + 1, 0.0);
  };
  pass(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = g[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) g[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  pass(w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = g[static_cast<std::size_t>(y) * w + x];
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) g[static_cast<std::size_t>(y) * w + x] = d[x];
  }
  std::vector<double> out(static_cast<std::size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out[img.index(x, y)] = std::sqrt(g[static_cast<std::size_t>(y + 1) * w + x + 1]);
    }
  }
  return out;
}

Image blend_linear(const Image& warped_target, const Image& reference_on_canvas,
                   BlendMode mode) {
  require(warped_target.width() == reference_on_canvas.width() &&
              warped_target.height() == reference_on_canvas.height(),
          ErrorCode::kDimensionMismatch, "blend inputs differ in size");
  const Image& t = warped_target;
  const Image& r = reference_on_canvas;
  std::vector<double> dt, dr;
  if (mode == BlendMode::kFeather) {
    dt = coverage_distance(t);
    dr = coverage_distance(r);
  }
  Image out(t.width(), t.height(), false);
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      const bool ct = t.covered(x, y);
      const bool cr = r.covered(x, y);
      if (!ct && !cr) continue;
      out.set_covered(x, y, true);
      if (ct != cr) {
        const Image& src = ct ? t : r;
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = src.at(x, y, c);
        continue;
      }
      double wt = 0.5;
      double wr = 0.5;
      if (mode == BlendMode::kFeather) {
        const auto i = t.index(x, y);
        wt = dt[i] / (dt[i] + dr[i]);
        wr = dr[i] / (dt[i] + dr[i]);
      }
      Rgb v;
      for (int c = 0; c < 3; ++c) v[c] = wr * r.at(x, y, c) + wt * t.at(x, y, c);
      out.set(x, y, v);
    }
  }
  return out;
}

}  // namespace parastitch
