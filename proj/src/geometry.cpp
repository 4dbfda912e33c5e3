#include "pqflex/geometry.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace pqflex {

namespace bg = boost::geometry;
using BPoint = bg::model::d2::point_xy<double>;
using BPolygon = bg::model::polygon<BPoint, false, true>;
using BMulti = bg::model::multi_polygon<BPolygon>;

double signed_area(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    twice += a.p * b.q - b.p * a.q;
  }
  return 0.5 * twice;
}

double polygon_area(const Polygon& poly) { return std::abs(signed_area(poly)); }

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.p - o.p) * (b.q - o.q) - (a.q - o.q) * (b.p - o.p);
}

bool on_segment(const Point& a, const Point& b, const Point& c, double tol) {
  const double len = std::hypot(b.p - a.p, b.q - a.q);
  if (std::abs(cross(a, b, c)) > tol * std::max(len, 1.0)) return false;
  return std::min(a.p, b.p) - tol <= c.p && c.p <= std::max(a.p, b.p) + tol && std::min(a.q, b.q) - tol <= c.q &&
         c.q <= std::max(a.q, b.q) + tol;
}

int sign(double v) { return (v > 0) - (v < 0); }

bool segments_meet(const Point& a, const Point& b, const Point& c, const Point& d) {
  const int d1 = sign(cross(c, d, a)), d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c)), d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return (d1 == 0 && on_segment(c, d, a, 0.0)) || (d2 == 0 && on_segment(c, d, b, 0.0)) ||
         (d3 == 0 && on_segment(a, b, c, 0.0)) || (d4 == 0 && on_segment(a, b, d, 0.0));
}

BPolygon to_boost(const Polygon& poly) {
  BPolygon out;
  for (const auto& v : poly) bg::append(out.outer(), BPoint(v.p, v.q));
  if (!poly.empty()) bg::append(out.outer(), BPoint(poly.front().p, poly.front().q));
  bg::correct(out);
  return out;
}

Polygon from_boost(const BPolygon& poly) {
  Polygon out;
  const auto& ring = poly.outer();
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) out.push_back({ring[i].x(), ring[i].y()});
  if (signed_area(out) < 0) std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace

bool point_in_polygon(const Point& pt, const Polygon& poly, double edge_tol) {
  const std::size_t n = poly.size();
  if (n == 0) return false;
  if (n == 1) return std::hypot(pt.p - poly[0].p, pt.q - poly[0].q) <= edge_tol;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if (on_segment(a, b, pt, edge_tol)) return true;
    if ((a.q > pt.q) != (b.q > pt.q)) {
      const double x = a.p + (pt.q - a.q) * (b.p - a.p) / (b.q - a.q);
      if (pt.p < x) inside = !inside;
    }
  }
  return inside;
}

Point centroid(const Polygon& poly) {
  const double a = signed_area(poly);
  const std::size_t n = poly.size();
  if (n == 0) return {};
  if (std::abs(a) < 1e-300) {
    Point m;
    for (const auto& v : poly) {
      m.p += v.p / static_cast<double>(n);
      m.q += v.q / static_cast<double>(n);
    }
    return m;
  }
  Point c;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& u = poly[i];
    const Point& v = poly[(i + 1) % n];
    const double w = u.p * v.q - v.p * u.q;
    c.p += (u.p + v.p) * w;
    c.q += (u.q + v.q) * w;
  }
  c.p /= 6.0 * a;
  c.q /= 6.0 * a;
  return c;
}

Polygon convex_hull(const Polygon& poly) {
  bg::model::multi_point<BPoint> pts;
  for (const auto& v : poly) bg::append(pts, BPoint(v.p, v.q));
  BPolygon hull;
  bg::convex_hull(pts, hull);
  bg::correct(hull);
  return from_boost(hull);
}

std::optional<SegmentPair> find_self_intersection(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return std::nullopt;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point& c = poly[j];
      const Point& d = poly[(j + 1) % n];
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // Neighbouring edges may only share their common vertex.
        const Point& far = j == i + 1 ? d : c;
        const Point& mid = j == i + 1 ? b : a;
        const Point& other = j == i + 1 ? a : b;
        if (n > 3 && sign(cross(other, mid, far)) == 0 &&
            (on_segment(other, mid, far, 0.0) || on_segment(mid, far, other, 0.0)))
          return SegmentPair{i, j};
        continue;
      }
      if (segments_meet(a, b, c, d)) return SegmentPair{i, j};
    }
  }
  return std::nullopt;
}

SelfIntersectionError::SelfIntersectionError(std::size_t polygon, SegmentPair pair)
    : std::invalid_argument(fmt::format("polygon {} is self-intersecting: edges {} and {} cross", polygon, pair.first,
                                        pair.second)),
      polygon(polygon),
      pair(pair) {}

std::vector<Polygon> intersect_polygons(const std::vector<Polygon>& polygons) {
  if (polygons.empty()) throw std::invalid_argument("intersection needs at least one polygon");
  for (std::size_t k = 0; k < polygons.size(); ++k)
    if (auto bad = find_self_intersection(polygons[k])) throw SelfIntersectionError(k, *bad);
  for (const auto& poly : polygons)
    if (polygon_area(poly) <= 0.0) return {};

  BMulti acc;
  acc.push_back(to_boost(polygons.front()));
  for (std::size_t k = 1; k < polygons.size() && !acc.empty(); ++k) {
    BMulti next;
    bg::intersection(acc, to_boost(polygons[k]), next);
    acc = std::move(next);
  }
  std::vector<Polygon> out;
  for (const auto& piece : acc) {
    Polygon p = from_boost(piece);
    if (p.size() >= 3 && polygon_area(p) > 0.0) out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const Polygon& a, const Polygon& b) { return polygon_area(a) > polygon_area(b); });
  return out;
}

}  // namespace pqflex
