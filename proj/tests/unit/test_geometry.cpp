#include "mvkit/error.hpp"
#include "mvkit/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mvkit;
using namespace mvkit::geo;

namespace {

Ring square(double x0, double y0, double side) {
  return {{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}};
}

}  // namespace

TEST(Shoelace, KnownShapes) {
  EXPECT_DOUBLE_EQ(signed_area(square(0, 0, 2)), 4.0);
  Ring cw = square(0, 0, 2);
  std::reverse(cw.begin(), cw.end());
  EXPECT_DOUBLE_EQ(signed_area(cw), -4.0);
  EXPECT_DOUBLE_EQ(signed_area({{0, 0}, {4, 0}, {0, 3}}), 6.0);
  Polygon holed{square(0, 0, 4), {square(1, 1, 1)}};
  EXPECT_DOUBLE_EQ(area(normalize(holed)), 15.0);
}

TEST(Normalize, OrientsAndDropsClosingVertex) {
  Ring r = square(0, 0, 1);
  std::reverse(r.begin(), r.end());
  r.push_back(r.front());
  const Polygon p = normalize(Polygon{r, {square(0.2, 0.2, 0.1)}});
  EXPECT_EQ(p.outer.size(), 4u);
  EXPECT_GT(signed_area(p.outer), 0.0);
  EXPECT_LT(signed_area(p.holes[0]), 0.0);
}

TEST(Validate, RejectsBadRings) {
  EXPECT_THROW(validate(Polygon{{{0, 0}, {1, 0}}, {}}), Error);
  EXPECT_THROW(validate(normalize(Polygon{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}, {}})), Error);  // bow tie
  EXPECT_THROW(validate(Polygon{{{0, 0}, {1, 0}, {2, 0}}, {}}), Error);
  EXPECT_THROW(validate(Polygon{{{0, 0}, {NAN, 0}, {0, 1}}, {}}), Error);
  EXPECT_NO_THROW(validate(normalize(Polygon{square(0, 0, 1), {}})));
}

TEST(Convexity, SquareAndArrow) {
  EXPECT_TRUE(is_convex(square(0, 0, 1)));
  EXPECT_FALSE(is_convex({{0, 0}, {2, 0}, {1, 0.5}, {2, 2}, {0, 2}}));
}

TEST(ClipHalfPlane, HalvesASquare) {
  const Ring half = clip_half_plane(square(0, 0, 2), 1.0, 0.0, 1.0);  // x <= 1
  EXPECT_NEAR(signed_area(half), 2.0, 1e-14);
  EXPECT_TRUE(clip_half_plane(square(0, 0, 2), 1.0, 0.0, -1.0).size() < 3);
}

TEST(ClipToConvex, OverlappingSquares) {
  EXPECT_NEAR(signed_area(clip_to_convex(square(0, 0, 2), square(1, 1, 2))), 1.0, 1e-14);
  EXPECT_NEAR(signed_area(clip_to_convex(square(0, 0, 2), square(5, 5, 1))), 0.0, 1e-14);
  EXPECT_NEAR(signed_area(clip_to_convex(square(0, 0, 1), square(-1, -1, 5))), 1.0, 1e-14);
}

TEST(ClipToConvex, NonconvexSubjectKeepsExactArea) {
  // U shape: 3x3 square with a 1x2 notch from the top middle.
  const Ring u{{0, 0}, {3, 0}, {3, 3}, {2, 3}, {2, 1}, {1, 1}, {1, 3}, {0, 3}};
  EXPECT_NEAR(signed_area(u), 7.0, 1e-14);
  // Clip to the band 2 <= y <= 3: only the two arms remain, area 2.
  EXPECT_NEAR(signed_area(clip_to_convex(u, {{-1, 2}, {4, 2}, {4, 4}, {-1, 4}})), 2.0, 1e-12);
}

TEST(PointInPolygon, RespectsHoles) {
  const Polygon p = normalize(Polygon{square(0, 0, 4), {square(1, 1, 1)}});
  EXPECT_TRUE(point_in_polygon({0.5, 0.5}, p));
  EXPECT_FALSE(point_in_polygon({1.5, 1.5}, p));
  EXPECT_FALSE(point_in_polygon({5, 1}, p));
}

TEST(Triangulate, AreaAndCount) {
  const Ring u{{0, 0}, {3, 0}, {3, 3}, {2, 3}, {2, 1}, {1, 1}, {1, 3}, {0, 3}};
  const auto tris = triangulate(u);
  EXPECT_EQ(tris.size(), u.size() - 2);
  double total = 0.0;
  for (const auto& t : tris) {
    const double a = signed_area({t[0], t[1], t[2]});
    EXPECT_GT(a, 0.0);
    total += a;
  }
  EXPECT_NEAR(total, 7.0, 1e-12);
}
