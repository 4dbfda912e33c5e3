#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pqflex {

/// A point of the P-Q plane (MW, MVAr).
struct Point {
  double p = 0.0;
  double q = 0.0;
};

/// Open vertex list; the closing edge back to the first vertex is implied.
using Polygon = std::vector<Point>;

double signed_area(const Polygon& poly);
/// Shoelace area; 0 for fewer than 3 vertices.
double polygon_area(const Polygon& poly);
/// Even-odd ray casting. Points on the boundary count as inside.
bool point_in_polygon(const Point& pt, const Polygon& poly, double edge_tol = 1e-9);
Point centroid(const Polygon& poly);
Polygon convex_hull(const Polygon& poly);

struct SegmentPair {
  std::size_t first = 0;  // edge k joins vertex k and k+1 (mod n)
  std::size_t second = 0;
};

/// First pair of crossing or touching non-adjacent edges, if any.
std::optional<SegmentPair> find_self_intersection(const Polygon& poly);

class SelfIntersectionError : public std::invalid_argument {
 public:
  SelfIntersectionError(std::size_t polygon, SegmentPair pair);
  std::size_t polygon;
  SegmentPair pair;
};

/**
 * Intersection of simple, possibly nonconvex polygons. Each returned piece is
 * counterclockwise; an empty result means the polygons share no area.
 */
std::vector<Polygon> intersect_polygons(const std::vector<Polygon>& polygons);

}  // namespace pqflex
