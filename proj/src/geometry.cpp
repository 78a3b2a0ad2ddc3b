#include "popdense/geometry.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace popdense {

namespace {

using Triangle = std::array<Point, 3>;

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

// Relative tolerance for orientation tests, scaled by the squared edge length.
constexpr double kCollinearEps = 1e-12;

double orient(const Point& a, const Point& b, const Point& c) { return cross(b - a, c - a); }

bool nearly_collinear(const Point& a, const Point& b, const Point& c) {
  double scale = std::max({(b - a).squaredNorm(), (c - a).squaredNorm(), (c - b).squaredNorm()});
  return std::abs(orient(a, b, c)) <= kCollinearEps * scale;
}

Ring ccw(Ring ring) {
  if (signed_area(ring) < 0) std::reverse(ring.begin(), ring.end());
  return ring;
}

bool point_in_triangle(const Point& p, const Point& a, const Point& b, const Point& c) {
  return orient(a, b, p) >= 0 && orient(b, c, p) >= 0 && orient(c, a, p) >= 0;
}

// Ear clipping for a simple counter-clockwise ring.
std::vector<Triangle> triangulate(const Ring& input) {
  Ring ring = ccw(input);
  std::vector<std::size_t> idx(ring.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<Triangle> out;
  out.reserve(ring.size());

  std::size_t guard = 0;
  std::size_t i = 0;
  while (idx.size() > 3) {
    const std::size_t n = idx.size();
    const Point& a = ring[idx[(i + n - 1) % n]];
    const Point& b = ring[idx[i % n]];
    const Point& c = ring[idx[(i + 1) % n]];
    if (nearly_collinear(a, b, c)) {
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i % n));
      guard = 0;
      continue;
    }
    bool ear = orient(a, b, c) > 0;
    if (ear) {
      for (std::size_t k = 0; k < n && ear; ++k) {
        const Point& p = ring[idx[k]];
        if (p == a || p == b || p == c) continue;
        if (point_in_triangle(p, a, b, c)) ear = false;
      }
    }
    if (ear) {
      out.push_back({a, b, c});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i % n));
      guard = 0;
    } else {
      i = (i + 1) % n;
      if (++guard > n) throw GeometryError("triangulation failed: ring is not simple");
    }
  }
  if (idx.size() == 3) {
    Triangle t{ring[idx[0]], ring[idx[1]], ring[idx[2]]};
    if (orient(t[0], t[1], t[2]) > 0) out.push_back(t);
  }
  return out;
}

// Sutherland-Hodgman clip of an arbitrary simple ring against a convex CCW
// triangle. Degenerate connecting edges in the output carry zero area.
Ring clip_to_triangle(const Ring& subject, const Triangle& tri) {
  Ring output = subject;
  for (int e = 0; e < 3 && !output.empty(); ++e) {
    const Point& a = tri[e];
    const Point& b = tri[(e + 1) % 3];
    Ring input = std::move(output);
    output.clear();
    const std::size_t n = input.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Point& cur = input[k];
      const Point& prev = input[(k + n - 1) % n];
      double dc = orient(a, b, cur);
      double dp = orient(a, b, prev);
      if (dc >= 0) {
        if (dp < 0) output.push_back(prev + (cur - prev) * (dp / (dp - dc)));
        output.push_back(cur);
      } else if (dp >= 0) {
        output.push_back(prev + (cur - prev) * (dp / (dp - dc)));
      }
    }
  }
  return output;
}

BoundingBox ring_box(const Ring& ring) {
  BoundingBox box;
  for (const auto& p : ring) {
    box.lo = box.lo.cwiseMin(p);
    box.hi = box.hi.cwiseMax(p);
  }
  return box;
}

double ring_intersection_area(const Ring& a, const Ring& b) {
  if (!ring_box(a).overlaps(ring_box(b))) return 0.0;
  Ring subject = ccw(a);
  double total = 0.0;
  for (const auto& tri : triangulate(b)) {
    BoundingBox tb;
    for (const auto& p : tri) {
      tb.lo = tb.lo.cwiseMin(p);
      tb.hi = tb.hi.cwiseMax(p);
    }
    if (!tb.overlaps(ring_box(subject))) continue;
    Ring clipped = clip_to_triangle(subject, tri);
    if (clipped.size() >= 3) total += std::max(0.0, signed_area(clipped));
  }
  return total;
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  auto on_segment = [](const Point& a, const Point& b, const Point& p) {
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) && std::min(a.y(), b.y()) <= p.y() &&
           p.y() <= std::max(a.y(), b.y());
  };
  double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
  double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

std::optional<std::string> ring_defect(const Ring& ring) {
  if (ring.size() < 3) return "fewer than 3 vertices";
  for (const auto& p : ring)
    if (!p.allFinite()) return "non-finite coordinate";
  if (signed_area(ring) == 0.0) return "zero area";
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (ring[i] == ring[(i + 1) % n]) return "repeated vertex";
    for (std::size_t j = i + 1; j < n; ++j) {
      bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n])) return "self-intersection";
    }
  }
  return std::nullopt;
}

// ---- WKT ------------------------------------------------------------------

struct WktCursor {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool consume(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }
  double number() {
    skip_ws();
    double v = 0;
    auto [p, ec] = std::from_chars(text.data() + pos, text.data() + text.size(), v);
    if (ec != std::errc{}) fail("expected number");
    pos = static_cast<std::size_t>(p - text.data());
    return v;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw GeometryError("malformed WKT polygon (" + what + " at offset " + std::to_string(pos) + ")");
  }
};

Ring parse_ring(WktCursor& cur) {
  cur.expect('(');
  Ring ring;
  do {
    double x = cur.number();
    double y = cur.number();
    ring.emplace_back(x, y);
  } while (cur.consume(','));
  cur.expect(')');
  if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  return ring;
}

void append_ring(std::string& out, const Ring& ring) {
  out += '(';
  for (std::size_t i = 0; i <= ring.size(); ++i) {
    const Point& p = ring[i % ring.size()];
    if (i) out += ", ";
    out += format_number(p.x());
    out += ' ';
    out += format_number(p.y());
  }
  out += ')';
}

}  // namespace

double signed_area(const Ring& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  // Shoelace relative to the first vertex keeps cancellation small for
  // projected coordinates with large offsets.
  const Point& o = ring[0];
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) s += cross(ring[i] - o, ring[i + 1] - o);
  return 0.5 * s;
}

double area_m2(const Polygon& poly) {
  double a = std::abs(signed_area(poly.outer));
  for (const auto& h : poly.holes) a -= std::abs(signed_area(h));
  return a;
}

BoundingBox bounding_box(const Polygon& poly) { return ring_box(poly.outer); }

Polygon rectangle(double x0, double y0, double x1, double y1) {
  return Polygon{{Point(x0, y0), Point(x1, y0), Point(x1, y1), Point(x0, y1)}, {}};
}

std::optional<std::string> polygon_defect(const Polygon& poly) {
  if (auto d = ring_defect(poly.outer)) return "outer ring: " + *d;
  for (std::size_t h = 0; h < poly.holes.size(); ++h) {
    if (auto d = ring_defect(poly.holes[h])) return "hole " + std::to_string(h) + ": " + *d;
    for (const auto& p : poly.holes[h])
      if (!contains_point(Polygon{poly.outer, {}}, p)) return "hole " + std::to_string(h) + " outside outer ring";
  }
  if (area_m2(poly) <= 0) return "non-positive area";
  return std::nullopt;
}

double intersection_area_m2(const Polygon& a, const Polygon& b) {
  if (!bounding_box(a).overlaps(bounding_box(b))) return 0.0;
  // Inclusion-exclusion over rings: holes lie inside their outer ring and
  // are pairwise disjoint.
  double total = ring_intersection_area(a.outer, b.outer);
  for (const auto& hb : b.holes) total -= ring_intersection_area(a.outer, hb);
  for (const auto& ha : a.holes) {
    total -= ring_intersection_area(ha, b.outer);
    for (const auto& hb : b.holes) total += ring_intersection_area(ha, hb);
  }
  return std::max(0.0, total);
}

double shared_boundary_length(const Polygon& a, const Polygon& b) {
  BoundingBox ba = bounding_box(a), bb = bounding_box(b);
  if (!ba.overlaps(bb)) return 0.0;
  const Ring& ra = a.outer;
  const Ring& rb = b.outer;
  double total = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const Point& p0 = ra[i];
    const Point& p1 = ra[(i + 1) % ra.size()];
    Point d = p1 - p0;
    double len2 = d.squaredNorm();
    if (len2 == 0) continue;
    for (std::size_t j = 0; j < rb.size(); ++j) {
      const Point& q0 = rb[j];
      const Point& q1 = rb[(j + 1) % rb.size()];
      if (!nearly_collinear(p0, p1, q0) || !nearly_collinear(p0, p1, q1)) continue;
      double t0 = (q0 - p0).dot(d) / len2;
      double t1 = (q1 - p0).dot(d) / len2;
      double lo = std::max(0.0, std::min(t0, t1));
      double hi = std::min(1.0, std::max(t0, t1));
      if (hi > lo) total += (hi - lo) * std::sqrt(len2);
    }
  }
  return total;
}

bool contains_point(const Polygon& poly, const Point& p) {
  auto in_ring = [&](const Ring& ring) {
    bool inside = false;
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
      const Point& a = ring[i];
      const Point& b = ring[j];
      if ((a.y() > p.y()) != (b.y() > p.y()) && p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
        inside = !inside;
    }
    return inside;
  };
  if (poly.outer.size() < 3 || !in_ring(poly.outer)) return false;
  for (const auto& h : poly.holes)
    if (in_ring(h)) return false;
  return true;
}

Polygon parse_wkt_polygon(std::string_view wkt) {
  WktCursor cur{wkt};
  cur.skip_ws();
  constexpr std::string_view kTag = "POLYGON";
  if (wkt.size() < kTag.size()) cur.fail("expected POLYGON");
  for (std::size_t i = 0; i < kTag.size(); ++i)
    if (std::toupper(static_cast<unsigned char>(wkt[cur.pos + i])) != kTag[i]) cur.fail("expected POLYGON");
  cur.pos += kTag.size();
  cur.expect('(');
  Polygon poly;
  poly.outer = parse_ring(cur);
  while (cur.consume(',')) poly.holes.push_back(parse_ring(cur));
  cur.expect(')');
  cur.skip_ws();
  if (cur.pos != wkt.size()) cur.fail("trailing characters");
  return poly;
}

std::string to_wkt(const Polygon& poly) {
  std::string out = "POLYGON (";
  append_ring(out, poly.outer);
  for (const auto& h : poly.holes) {
    out += ", ";
    append_ring(out, h);
  }
  out += ')';
  return out;
}

}  // namespace popdense
