#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "parastitch/geometry.hpp"

namespace parastitch {

struct Triangle {
  std::array<std::size_t, 3> v;  // counter-clockwise
};

// Delaunay triangulation by a lexicographic sweep followed by Lawson edge
// flips. Exact duplicates are triangulated once, through the first occurrence.
// Throws kDegenerateConfiguration when fewer than three distinct non-collinear
// points are given.
std::vector<Triangle> delaunay_triangulate(std::span<const Point2> points);

// Undirected edges (i < j) of the triangulation above.
std::vector<std::pair<std::size_t, std::size_t>> delaunay_edges(
    std::span<const Point2> points);

// Orientation and in-circle determinants evaluated in extended precision.
// orient > 0 when a, b, c turn counter-clockwise; incircle > 0 when d lies
// strictly inside the circle through the counter-clockwise a, b, c.
long double orient2d(Point2 a, Point2 b, Point2 c);
long double incircle(Point2 a, Point2 b, Point2 c, Point2 d);

}  // namespace parastitch
