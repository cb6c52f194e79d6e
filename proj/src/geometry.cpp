#include "mvkit/geometry.hpp"

#include "mvkit/error.hpp"

#include <algorithm>
#include <cmath>

namespace mvkit::geo {

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int orientation(const Point& o, const Point& a, const Point& b) {
  const double c = cross(o, a, b);
  return (c > 0.0) - (c < 0.0);
}

bool on_segment(const Point& p, const Point& a, const Point& b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(q1, p1, p2)) return true;
  if (o2 == 0 && on_segment(q2, p1, p2)) return true;
  if (o3 == 0 && on_segment(p1, q1, q2)) return true;
  if (o4 == 0 && on_segment(p2, q1, q2)) return true;
  return false;
}

Ring cleaned(const Ring& ring) {
  Ring out;
  out.reserve(ring.size());
  for (const auto& p : ring) {
    if (out.empty() || out.back().x != p.x || out.back().y != p.y) out.push_back(p);
  }
  while (out.size() > 1 && out.front().x == out.back().x && out.front().y == out.back().y) out.pop_back();
  return out;
}

void validate_ring(const Ring& ring, const char* what) {
  if (ring.size() < 3) fail(ErrorCode::InvalidPolygon, std::string(what) + " has fewer than 3 distinct vertices");
  for (const auto& p : ring) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      fail(ErrorCode::InvalidPolygon, std::string(what) + " has non-finite coordinates");
    }
  }
  if (!is_simple(ring)) fail(ErrorCode::InvalidPolygon, std::string(what) + " is self-intersecting");
  if (signed_area(ring) == 0.0) fail(ErrorCode::InvalidPolygon, std::string(what) + " has zero area");
}

}  // namespace

double signed_area(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    s += (a.x - ring[0].x) * (b.y - ring[0].y) - (b.x - ring[0].x) * (a.y - ring[0].y);
  }
  return 0.5 * s;
}

double area(const Polygon& polygon) {
  double a = std::abs(signed_area(polygon.outer));
  for (const auto& h : polygon.holes) a -= std::abs(signed_area(h));
  return a;
}

BoundingBox bounds(const Ring& ring) {
  BoundingBox b{INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (const auto& p : ring) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

Polygon normalize(Polygon polygon) {
  polygon.outer = cleaned(polygon.outer);
  if (signed_area(polygon.outer) < 0.0) std::reverse(polygon.outer.begin(), polygon.outer.end());
  for (auto& h : polygon.holes) {
    h = cleaned(h);
    if (signed_area(h) > 0.0) std::reverse(h.begin(), h.end());
  }
  return polygon;
}

bool is_simple(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  std::vector<BoundingBox> boxes(n);
  for (std::size_t i = 0; i < n; ++i) boxes[i] = bounds({ring[i], ring[(i + 1) % n]});
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a1 = ring[i];
    const Point& a2 = ring[(i + 1) % n];
    // Adjacent edges may only share their common vertex.
    const Point& a3 = ring[(i + 2) % n];
    if (orientation(a1, a2, a3) == 0) {
      const double dot = (a2.x - a1.x) * (a3.x - a2.x) + (a2.y - a1.y) * (a3.y - a2.y);
      if (dot < 0.0) return false;
    }
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (!boxes[i].overlaps(boxes[j])) continue;
      if (segments_intersect(a1, a2, ring[j], ring[(j + 1) % n])) return false;
    }
  }
  return true;
}

bool is_convex(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  int sign = 0;
  const double scale = [&] {
    const auto b = bounds(ring);
    return std::max(b.max_x - b.min_x, b.max_y - b.min_y);
  }();
  const double tol = kEdgeTolerance * scale;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = cross(ring[i], ring[(i + 1) % n], ring[(i + 2) % n]);
    if (std::abs(c) <= tol * scale) continue;
    const int s = c > 0.0 ? 1 : -1;
    if (sign == 0) sign = s;
    if (s != sign) return false;
  }
  return sign != 0;
}

void validate(const Polygon& polygon) {
  validate_ring(polygon.outer, "outer ring");
  for (const auto& h : polygon.holes) validate_ring(h, "hole");
  if (area(polygon) <= 0.0) fail(ErrorCode::InvalidPolygon, "polygon has nonpositive area");
}

Ring clip_half_plane(const Ring& subject, double a, double b, double c) {
  Ring out;
  const std::size_t n = subject.size();
  if (n == 0) return out;
  const double norm = std::hypot(a, b);
  const double tol = kEdgeTolerance * (norm > 0.0 ? norm : 1.0);
  auto value = [&](const Point& p) { return a * p.x + b * p.y - c; };
  for (std::size_t i = 0; i < n; ++i) {
    const Point& cur = subject[i];
    const Point& nxt = subject[(i + 1) % n];
    const double vc = value(cur);
    const double vn = value(nxt);
    const bool in_c = vc <= tol;
    const bool in_n = vn <= tol;
    if (in_c) out.push_back(cur);
    if (in_c != in_n) {
      const double t = std::clamp(vc / (vc - vn), 0.0, 1.0);
      const Point p{cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)};
      if (out.empty() || out.back().x != p.x || out.back().y != p.y) out.push_back(p);
    }
  }
  return cleaned(out);
}

Ring clip_to_convex(const Ring& subject, const Ring& convex_ccw) {
  Ring out = subject;
  const std::size_t n = convex_ccw.size();
  for (std::size_t i = 0; i < n && !out.empty(); ++i) {
    const Point& p = convex_ccw[i];
    const Point& q = convex_ccw[(i + 1) % n];
    // Inside = left of p->q: -(q.y-p.y)*x + (q.x-p.x)*y >= -(q.y-p.y)*p.x + (q.x-p.x)*p.y
    const double a = q.y - p.y;
    const double b = -(q.x - p.x);
    out = clip_half_plane(out, a, b, a * p.x + b * p.y);
  }
  return out.size() >= 3 ? out : Ring{};
}

bool point_in_ring(const Point& p, const Ring& ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = ring[i];
    const Point& b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

bool point_in_polygon(const Point& p, const Polygon& polygon) {
  if (!point_in_ring(p, polygon.outer)) return false;
  for (const auto& h : polygon.holes)
    if (point_in_ring(p, h)) return false;
  return true;
}

std::vector<std::array<Point, 3>> triangulate(const Ring& ring_ccw) {
  std::vector<std::array<Point, 3>> tris;
  std::vector<Point> v = cleaned(ring_ccw);
  if (signed_area(v) < 0.0) std::reverse(v.begin(), v.end());
  auto inside_tri = [](const Point& p, const Point& a, const Point& b, const Point& c) {
    return cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0;
  };
  while (v.size() > 3) {
    const std::size_t n = v.size();
    bool clipped = false;
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = v[(i + n - 1) % n];
      const Point& b = v[i];
      const Point& c = v[(i + 1) % n];
      const double turn = cross(a, b, c);
      if (turn == 0.0) {  // collinear vertex carries no area
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        clipped = true;
        break;
      }
      if (turn < 0.0) continue;
      bool ear = true;
      for (std::size_t j = 0; j < n && ear; ++j) {
        if (j == i || j == (i + n - 1) % n || j == (i + 1) % n) continue;
        const Point& q = v[j];
        if ((q.x == a.x && q.y == a.y) || (q.x == c.x && q.y == c.y)) continue;
        if (inside_tri(q, a, b, c)) ear = false;
      }
      if (!ear) continue;
      tris.push_back({a, b, c});
      v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) fail(ErrorCode::InvalidPolygon, "triangulation found no ear; ring is not simple");
  }
  if (v.size() == 3 && cross(v[0], v[1], v[2]) > 0.0) tris.push_back({v[0], v[1], v[2]});
  return tris;
}

}  // namespace mvkit::geo
