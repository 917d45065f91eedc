#include "parastitch/delaunay.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <unordered_map>

#include "parastitch/error.hpp"

namespace parastitch {

long double orient2d(Point2 a, Point2 b, Point2 c) {
  const long double abx = static_cast<long double>(b.x) - a.x;
  const long double aby = static_cast<long double>(b.y) - a.y;
  const long double acx = static_cast<long double>(c.x) - a.x;
  const long double acy = static_cast<long double>(c.y) - a.y;
  return abx * acy - aby * acx;
}

long double incircle(Point2 a, Point2 b, Point2 c, Point2 d) {
  const long double adx = static_cast<long double>(a.x) - d.x;
  const long double ady = static_cast<long double>(a.y) - d.y;
  const long double bdx = static_cast<long double>(b.x) - d.x;
  const long double bdy = static_cast<long double>(b.y) - d.y;
  const long double cdx = static_cast<long double>(c.x) - d.x;
  const long double cdy = static_cast<long double>(c.y) - d.y;
  const long double ad = adx * adx + ady * ady;
  const long double bd = bdx * bdx + bdy * bdy;
  const long double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
         ad * (bdx * cdy - bdy * cdx);
}

namespace {

std::uint64_t edge_key(std::size_t u, std::size_t v) {
  return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
}

class Mesh {
 public:
  explicit Mesh(std::span<const Point2> pts) : pts_(pts) {}

  void add(std::size_t a, std::size_t b, std::size_t c) {
    const std::size_t t = tris_.size();
    tris_.push_back({{a, b, c}});
    link(t);
  }

  // Lawson flips until every interior edge is locally Delaunay.
  void legalize() {
    std::vector<std::uint64_t> stack;
    for (const auto& [key, t] : edges_) stack.push_back(key);
    std::sort(stack.begin(), stack.end());
    const std::size_t cap = 50 * (tris_.size() + 10) * (tris_.size() + 10);
    std::size_t flips = 0;
    while (!stack.empty() && flips < cap) {
      const std::uint64_t key = stack.back();
      stack.pop_back();
      const std::size_t a = key >> 32;
      const std::size_t b = key & 0xffffffffu;
      auto it1 = edges_.find(edge_key(a, b));
      auto it2 = edges_.find(edge_key(b, a));
      if (it1 == edges_.end() || it2 == edges_.end()) continue;
      const std::size_t t1 = it1->second;
      const std::size_t t2 = it2->second;
      const std::size_t c = opposite(t1, a, b);
      const std::size_t d = opposite(t2, b, a);
      if (incircle(pts_[a], pts_[b], pts_[c], pts_[d]) <= tolerance(a, b, c, d)) {
        continue;
      }
      if (orient2d(pts_[c], pts_[a], pts_[d]) <= 0 ||
          orient2d(pts_[d], pts_[b], pts_[c]) <= 0) {
        continue;
      }
      unlink(t1);
      unlink(t2);
      tris_[t1] = {{c, a, d}};
      tris_[t2] = {{d, b, c}};
      link(t1);
      link(t2);
      ++flips;
      for (auto [u, v] : {std::pair{a, d}, std::pair{d, b}, std::pair{b, c},
                          std::pair{c, a}}) {
        stack.push_back(edge_key(u, v));
      }
    }
  }

  const std::vector<Triangle>& triangles() const { return tris_; }

 private:
  long double tolerance(std::size_t a, std::size_t b, std::size_t c,
                        std::size_t d) const {
    long double scale = 0;
    for (auto i : {a, b, c}) {
      scale = std::max(scale, std::abs(static_cast<long double>(pts_[i].x) -
                                       pts_[d].x));
      scale = std::max(scale, std::abs(static_cast<long double>(pts_[i].y) -
                                       pts_[d].y));
    }
    return 1e-15L * scale * scale * scale * scale;
  }

  std::size_t opposite(std::size_t t, std::size_t a, std::size_t b) const {
    for (auto v : tris_[t].v) {
      if (v != a && v != b) return v;
    }
    return a;
  }

  void link(std::size_t t) {
    const auto& v = tris_[t].v;
    for (int k = 0; k < 3; ++k) edges_[edge_key(v[k], v[(k + 1) % 3])] = t;
  }

  void unlink(std::size_t t) {
    const auto& v = tris_[t].v;
    for (int k = 0; k < 3; ++k) edges_.erase(edge_key(v[k], v[(k + 1) % 3]));
  }

  std::span<const Point2> pts_;
  std::vector<Triangle> tris_;
  std::unordered_map<std::uint64_t, std::size_t> edges_;
};

}  // namespace

std::vector<Triangle> delaunay_triangulate(std::span<const Point2> points) {
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return points[i].x < points[j].x ||
           (points[i].x == points[j].x && points[i].y < points[j].y);
  });
  order.erase(std::unique(order.begin(), order.end(),
                          [&](std::size_t i, std::size_t j) {
                            return points[i] == points[j];
                          }),
              order.end());

  // First point not collinear with the leading pair.
  std::size_t k = 2;
  while (k < order.size() &&
         orient2d(points[order[0]], points[order[1]], points[order[k]]) == 0) {
    ++k;
  }
  require(order.size() >= 3 && k < order.size(),
          ErrorCode::kDegenerateConfiguration,
          "Delaunay triangulation needs three non-collinear points");

  Mesh mesh(points);
  // Fan from the apex over the collinear prefix; the hull is kept in
  // counter-clockwise order.
  const std::size_t apex = order[k];
  const bool apex_left =
      orient2d(points[order[0]], points[order[1]], points[apex]) > 0;
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (apex_left) {
      mesh.add(order[i], order[i + 1], apex);
    } else {
      mesh.add(order[i + 1], order[i], apex);
    }
  }
  if (apex_left) {
    for (std::size_t i = 0; i < k; ++i) hull.push_back(order[i]);
    hull.push_back(apex);
  } else {
    hull.push_back(apex);
    for (std::size_t i = k; i-- > 0;) hull.push_back(order[i]);
  }

  for (std::size_t s = k + 1; s < order.size(); ++s) {
    const std::size_t p = order[s];
    const std::size_t h = hull.size();
    std::vector<bool> visible(h);
    for (std::size_t e = 0; e < h; ++e) {
      visible[e] =
          orient2d(points[hull[e]], points[hull[(e + 1) % h]], points[p]) < 0;
    }
    // Visible edges form one circular run; find where it starts.
    std::size_t start = h;
    for (std::size_t e = 0; e < h; ++e) {
      if (visible[e] && !visible[(e + h - 1) % h]) {
        start = e;
        break;
      }
    }
    if (start == h) continue;  // cannot happen for sorted input
    std::size_t count = 0;
    while (visible[(start + count) % h]) {
      const std::size_t a = hull[(start + count) % h];
      const std::size_t b = hull[(start + count + 1) % h];
      mesh.add(b, a, p);
      ++count;
    }
    // Replace hull vertices strictly inside the visible chain by p.
    std::vector<std::size_t> next;
    next.reserve(h + 1);
    for (std::size_t i = 0; i <= h - count; ++i) {
      next.push_back(hull[(start + count + i) % h]);
    }
    next.push_back(p);
    hull = std::move(next);
  }
  mesh.legalize();
  return mesh.triangles();
}

std::vector<std::pair<std::size_t, std::size_t>> delaunay_edges(
    std::span<const Point2> points) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& t : delaunay_triangulate(points)) {
    for (int k = 0; k < 3; ++k) {
      auto a = t.v[k];
      auto b = t.v[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edges.emplace_back(a, b);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace parastitch
