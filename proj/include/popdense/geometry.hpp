#pragma once

#include "popdense/core.hpp"

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace popdense {

using Point = Eigen::Vector2d;
using Ring = std::vector<Point>;

/// Planar polygon in meters: one outer ring and optional holes. Rings are
/// stored open (the closing vertex is not repeated) in either orientation.
struct Polygon {
  Ring outer;
  std::vector<Ring> holes;
};

struct BoundingBox {
  Point lo{Point::Constant(std::numeric_limits<double>::infinity())};
  Point hi{Point::Constant(-std::numeric_limits<double>::infinity())};

  bool overlaps(const BoundingBox& o) const {
    return lo.x() <= o.hi.x() && o.lo.x() <= hi.x() && lo.y() <= o.hi.y() && o.lo.y() <= hi.y();
  }
};

inline constexpr double kSquareMetersPerKm2 = 1e6;

double signed_area(const Ring& ring);
double area_m2(const Polygon& poly);
inline double area_km2(const Polygon& poly) { return area_m2(poly) / kSquareMetersPerKm2; }

BoundingBox bounding_box(const Polygon& poly);

Polygon rectangle(double x0, double y0, double x1, double y1);

// Returns a description of the first defect found (too few vertices, zero
// area, self-intersection), or nullopt for a simple polygon.
std::optional<std::string> polygon_defect(const Polygon& poly);

// Area of the intersection of two simple polygons, in m^2. Polygons are
// clipped against an ear-clipping triangulation of the second operand.
double intersection_area_m2(const Polygon& a, const Polygon& b);

// Total length over which the outer boundaries of two polygons run along
// each other (collinear, overlapping edges), in meters.
double shared_boundary_length(const Polygon& a, const Polygon& b);

bool contains_point(const Polygon& poly, const Point& p);

Polygon parse_wkt_polygon(std::string_view wkt);
std::string to_wkt(const Polygon& poly);

}  // namespace popdense
