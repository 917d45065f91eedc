#include <algorithm>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include "parastitch/delaunay.hpp"
#include "parastitch/error.hpp"
#include "parastitch/maxflow.hpp"
#include "support.hpp"

namespace parastitch {
namespace {

// Circumcircle test written out directly: squared distance from d to the
// circumcenter of a, b, c compared against the circumradius.
bool strictly_inside_circumcircle(Point2 a, Point2 b, Point2 c, Point2 d) {
  const long double ax = a.x, ay = a.y, bx = b.x, by = b.y, cx = c.x, cy = c.y;
  const long double den = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
  const long double ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) +
                          (cx * cx + cy * cy) * (ay - by)) / den;
  const long double uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) +
                          (cx * cx + cy * cy) * (bx - ax)) / den;
  const long double r2 = (ax - ux) * (ax - ux) + (ay - uy) * (ay - uy);
  const long double d2 = (d.x - ux) * (d.x - ux) + (d.y - uy) * (d.y - uy);
  return d2 < r2 * (1 - 1e-12L);
}

double signed_area(Point2 a, Point2 b, Point2 c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double hull_area(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end(),
            [](Point2 a, Point2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  std::vector<Point2> h;
  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t start = h.size();
    for (const auto& p : pts) {
      while (h.size() >= start + 2 && signed_area(h[h.size() - 2], h.back(), p) <= 0)
        h.pop_back();
      h.push_back(p);
    }
    h.pop_back();
    std::reverse(pts.begin(), pts.end());
  }
  double area = 0;
  for (std::size_t i = 1; i + 1 < h.size(); ++i) area += signed_area(h[0], h[i], h[i + 1]);
  return area;
}

TEST(Delaunay, TrianglesHaveEmptyCircumcircles) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto pts = testing::random_points(rng, 10 + rng.index(60), 100, 100);
    const auto tris = delaunay_triangulate(pts);
    for (const auto& tri : tris) {
      const Point2 a = pts[tri.v[0]], b = pts[tri.v[1]], c = pts[tri.v[2]];
      EXPECT_GT(signed_area(a, b, c), 0.0);
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (k == tri.v[0] || k == tri.v[1] || k == tri.v[2]) continue;
        EXPECT_FALSE(strictly_inside_circumcircle(a, b, c, pts[k]));
      }
    }
  }
}

TEST(Delaunay, TrianglesTileTheConvexHull) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto pts = testing::random_points(rng, 5 + rng.index(80), 100, 100);
    double area = 0;
    for (const auto& tri : delaunay_triangulate(pts)) {
      area += signed_area(pts[tri.v[0]], pts[tri.v[1]], pts[tri.v[2]]);
    }
    EXPECT_NEAR(area, hull_area(pts), 1e-9 * hull_area(pts));
  }
}

TEST(Delaunay, GridWithCocircularPoints) {
  std::vector<Point2> pts;
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) pts.push_back({double(x), double(y)});
  const auto tris = delaunay_triangulate(pts);
  EXPECT_EQ(tris.size(), 32u);
  // Euler: E = V + F - 1 for a triangulated convex region (F excludes outer).
  EXPECT_EQ(delaunay_edges(pts).size(), 25u + 32u - 1u);
}

TEST(Delaunay, DuplicatesUseFirstOccurrence) {
  const std::vector<Point2> pts = {{0, 0}, {1, 0}, {0, 1}, {1, 0}};
  const auto edges = delaunay_edges(pts);
  EXPECT_EQ(edges.size(), 3u);
  for (const auto& [i, j] : edges) EXPECT_NE(j, 3u);
}

TEST(Delaunay, CollinearIsDegenerate) {
  const std::vector<Point2> pts = {{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  try {
    delaunay_triangulate(pts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateConfiguration);
  }
}

TEST(Predicates, Signs) {
  EXPECT_GT(orient2d({0, 0}, {1, 0}, {0, 1}), 0);
  EXPECT_LT(orient2d({0, 0}, {0, 1}, {1, 0}), 0);
  EXPECT_EQ(orient2d({0, 0}, {1, 1}, {2, 2}), 0);
  EXPECT_GT(incircle({0, 0}, {2, 0}, {0, 2}, {1, 1}), 0);
  EXPECT_LT(incircle({0, 0}, {2, 0}, {0, 2}, {3, 3}), 0);
  EXPECT_EQ(incircle({0, 0}, {2, 0}, {0, 2}, {2, 2}), 0);
}

struct SmallGraph {
  std::size_t n;
  std::vector<double> to_sink_cost;    // paid when node is on the sink side
  std::vector<double> to_source_cost;  // paid when node is on the source side
  struct E {
    std::size_t u, v;
    double cap, rev;
  };
  std::vector<E> edges;

  double cut_value(std::uint32_t sink_mask) const {
    double c = 0;
    for (std::size_t i = 0; i < n; ++i) {
      c += (sink_mask >> i) & 1 ? to_sink_cost[i] : to_source_cost[i];
    }
    for (const auto& e : edges) {
      const bool us = (sink_mask >> e.u) & 1, vs = (sink_mask >> e.v) & 1;
      if (!us && vs) c += e.cap;
      if (us && !vs) c += e.rev;
    }
    return c;
  }
};

TEST(MaxFlow, MatchesExhaustiveMinCut) {
  Rng rng(99);
  for (int t = 0; t < 200; ++t) {
    SmallGraph sg;
    sg.n = 1 + rng.index(10);
    MaxFlowGraph g(sg.n);
    for (std::size_t i = 0; i < sg.n; ++i) {
      sg.to_sink_cost.push_back(rng.uniform() < 0.3 ? 0.0 : rng.uniform(0, 10));
      sg.to_source_cost.push_back(rng.uniform() < 0.3 ? 0.0 : rng.uniform(0, 10));
      g.add_terminal(i, sg.to_sink_cost[i], sg.to_source_cost[i]);
    }
    for (std::size_t u = 0; u < sg.n; ++u) {
      for (std::size_t v = 0; v < sg.n; ++v) {
        if (u == v || rng.uniform() > 0.3) continue;
        const SmallGraph::E e{u, v, rng.uniform(0, 5), rng.uniform() < 0.5 ? 0.0 : rng.uniform(0, 5)};
        sg.edges.push_back(e);
        g.add_edge(e.u, e.v, e.cap, e.rev);
      }
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t mask = 0; mask < (1u << sg.n); ++mask) {
      best = std::min(best, sg.cut_value(mask));
    }
    const double flow = g.solve();
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < sg.n; ++i) mask |= g.on_sink_side(i) ? (1u << i) : 0u;
    EXPECT_NEAR(sg.cut_value(mask), best, 1e-9);
    EXPECT_NEAR(flow, best, 1e-9) << "trial " << t;
  }
}

}  // namespace
}  // namespace parastitch
