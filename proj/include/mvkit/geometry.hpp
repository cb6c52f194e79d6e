#pragma once

#include <array>
#include <vector>

namespace mvkit::geo {

/// Point-on-edge tolerance for clipping, in coordinate units.
inline constexpr double kEdgeTolerance = 1e-9;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Ring = std::vector<Point>;  // implicitly closed; no repeated closing vertex

/// Outer ring counterclockwise, holes clockwise (normalize() enforces this).
struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

struct BoundingBox {
  double min_x, min_y, max_x, max_y;
  bool overlaps(const BoundingBox& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
};

double signed_area(const Ring& ring);
/// Outer area minus hole areas.
double area(const Polygon& polygon);
BoundingBox bounds(const Ring& ring);

/// Drops a repeated closing vertex and consecutive duplicates, and orients the
/// outer ring counterclockwise and holes clockwise.
Polygon normalize(Polygon polygon);

/// Throws InvalidPolygon unless every ring has >= 3 distinct vertices, finite
/// coordinates, is simple, and the outer ring has positive area.
void validate(const Polygon& polygon);
bool is_simple(const Ring& ring);
bool is_convex(const Ring& ring);

/// Sutherland-Hodgman: part of `subject` on the side a*x + b*y <= c.
Ring clip_half_plane(const Ring& subject, double a, double b, double c);
/// Sutherland-Hodgman against a counterclockwise convex ring. For a
/// nonconvex subject the output may contain zero-width bridges, but its
/// signed area is exact.
Ring clip_to_convex(const Ring& subject, const Ring& convex_ccw);

bool point_in_ring(const Point& p, const Ring& ring);
bool point_in_polygon(const Point& p, const Polygon& polygon);

/// Ear-clipping triangulation of a simple counterclockwise ring.
std::vector<std::array<Point, 3>> triangulate(const Ring& ring_ccw);

}  // namespace mvkit::geo
