#include "popdense/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace popdense {

namespace {

constexpr double kSurfaceRelTol = 1e-6;
constexpr double kMinSharedBoundaryM = 1e-6;

std::vector<Overlap> overlaps_unchecked(const Polygon& poly, const BoundingBox& box, std::span<const AdminArea> areas,
                                        std::span<const BoundingBox> area_boxes) {
  std::vector<Overlap> out;
  for (std::size_t j = 0; j < areas.size(); ++j) {
    if (!box.overlaps(area_boxes[j])) continue;
    double km2 = intersection_area_m2(poly, areas[j].polygon) / kSquareMetersPerKm2;
    if (km2 > kOverlapFloorKm2) out.push_back({j, areas[j].id, km2});
  }
  return out;
}

std::vector<BoundingBox> boxes_of(std::span<const AdminArea> areas) {
  std::vector<BoundingBox> boxes;
  boxes.reserve(areas.size());
  for (const auto& a : areas) boxes.push_back(bounding_box(a.polygon));
  return boxes;
}

}  // namespace

GridTessellation::GridTessellation(std::vector<Cell> cells) : cells_(std::move(cells)), surfaces_(cells_.size()) {
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    index_.emplace(cells_[i].id, static_cast<CellIndex>(i));
    surfaces_[static_cast<Eigen::Index>(i)] = cells_[i].surface_km2;
  }
}

std::optional<CellIndex> GridTessellation::find(const CellId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

CellIndex GridTessellation::index_of(const CellId& id) const {
  if (auto i = find(id)) return *i;
  throw InputError("unknown cell id '" + id + "'");
}

std::vector<Overlap> intersect_area(const Cell& cell, std::span<const AdminArea> areas) {
  if (auto d = polygon_defect(cell.polygon)) throw GeometryError("cell '" + cell.id + "': " + *d);
  for (const auto& a : areas)
    if (auto d = polygon_defect(a.polygon)) throw GeometryError("admin area '" + a.id + "': " + *d);
  auto boxes = boxes_of(areas);
  return overlaps_unchecked(cell.polygon, bounding_box(cell.polygon), areas, boxes);
}

PopulationDensityMap census_to_grid(const GridTessellation& grid, std::span<const AdminArea> areas) {
  for (const auto& a : areas) {
    if (!(a.surface_km2 > 0)) throw InputError("admin area '" + a.id + "' has non-positive surface");
    if (!(a.population >= 0)) throw InputError("admin area '" + a.id + "' has negative population");
  }
  auto boxes = boxes_of(areas);
  PopulationDensityMap map{Vec::Zero(static_cast<Eigen::Index>(grid.size())), std::nullopt};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Cell& cell = grid[i];
    if (!(cell.surface_km2 > 0)) throw InputError("cell '" + cell.id + "' has non-positive surface");
    double inhabitants = 0.0;
    for (const auto& ov : overlaps_unchecked(cell.polygon, bounding_box(cell.polygon), areas, boxes))
      inhabitants += areas[ov.area].population * ov.surface_km2 / areas[ov.area].surface_km2;
    map.values[static_cast<Eigen::Index>(i)] = inhabitants / cell.surface_km2;
  }
  return map;
}

std::string ValidationReport::summary() const {
  std::string s;
  for (const auto& v : violations) {
    if (!s.empty()) s += "; ";
    switch (v.kind) {
      case Violation::Kind::DuplicateId: s += "duplicate cell id '" + v.first + "'"; break;
      case Violation::Kind::DegeneratePolygon: s += "cell '" + v.first + "': " + v.detail; break;
      case Violation::Kind::SurfaceMismatch: s += "cell '" + v.first + "': " + v.detail; break;
      case Violation::Kind::Overlap:
        s += "cells '" + v.first + "' and '" + v.second + "' overlap by " + format_number(v.shared_km2) + " km2";
        break;
    }
  }
  return s;
}

ValidationReport validate_tessellation(const GridTessellation& grid) {
  ValidationReport report;
  std::set<CellId> seen;
  std::vector<bool> usable(grid.size(), true);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Cell& c = grid[i];
    if (!seen.insert(c.id).second) report.violations.push_back({Violation::Kind::DuplicateId, c.id, {}, 0.0, {}});
    if (auto d = polygon_defect(c.polygon)) {
      report.violations.push_back({Violation::Kind::DegeneratePolygon, c.id, {}, 0.0, *d});
      usable[i] = false;
      continue;
    }
    double geometric = area_km2(c.polygon);
    if (!(c.surface_km2 > 0) || std::abs(c.surface_km2 - geometric) > kSurfaceRelTol * geometric)
      report.violations.push_back({Violation::Kind::SurfaceMismatch, c.id, {}, 0.0,
                                   "stored surface " + format_number(c.surface_km2) + " km2 vs polygon area " +
                                       format_number(geometric) + " km2"});
  }

  std::vector<BoundingBox> boxes(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (usable[i]) boxes[i] = bounding_box(grid[i].polygon);
  // Sweep over x so the pairwise check stays near-linear on regular grids.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (usable[i]) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return boxes[a].lo.x() < boxes[b].lo.x(); });
  std::vector<std::pair<std::size_t, std::size_t>> overlapping;
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      std::size_t i = order[a], j = order[b];
      if (boxes[j].lo.x() > boxes[i].hi.x()) break;
      if (!boxes[i].overlaps(boxes[j])) continue;
      double km2 = intersection_area_m2(grid[i].polygon, grid[j].polygon) / kSquareMetersPerKm2;
      if (km2 > kOverlapFloorKm2) overlapping.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  std::sort(overlapping.begin(), overlapping.end());
  for (auto [i, j] : overlapping) {
    double km2 = intersection_area_m2(grid[i].polygon, grid[j].polygon) / kSquareMetersPerKm2;
    report.violations.push_back({Violation::Kind::Overlap, grid[i].id, grid[j].id, km2, {}});
  }
  return report;
}

void require_valid(const GridTessellation& grid) {
  auto report = validate_tessellation(grid);
  if (!report.ok()) throw GeometryError("invalid tessellation: " + report.summary());
}

void require_valid(std::span<const AdminArea> areas) {
  std::set<std::string> seen;
  for (const auto& a : areas) {
    if (!seen.insert(a.id).second) throw GeometryError("duplicate admin area id '" + a.id + "'");
    if (auto d = polygon_defect(a.polygon)) throw GeometryError("admin area '" + a.id + "': " + *d);
    double geometric = area_km2(a.polygon);
    if (!(a.surface_km2 > 0) || std::abs(a.surface_km2 - geometric) > kSurfaceRelTol * geometric)
      throw GeometryError("admin area '" + a.id + "': stored surface " + format_number(a.surface_km2) +
                          " km2 vs polygon area " + format_number(geometric) + " km2");
    if (!(a.population >= 0)) throw InputError("admin area '" + a.id + "' has negative population");
  }
}

std::vector<CellIndex> cells_intersecting(const GridTessellation& grid, const Polygon& region) {
  std::vector<CellIndex> out;
  BoundingBox box = bounding_box(region);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!box.overlaps(bounding_box(grid[i].polygon))) continue;
    if (intersection_area_m2(grid[i].polygon, region) / kSquareMetersPerKm2 > kOverlapFloorKm2)
      out.push_back(static_cast<CellIndex>(i));
  }
  return out;
}

std::vector<CellIndex> adjacent_cells(const GridTessellation& grid, std::span<const CellIndex> seed) {
  std::set<CellIndex> in_seed(seed.begin(), seed.end());
  std::vector<CellIndex> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto ci = static_cast<CellIndex>(i);
    if (in_seed.count(ci)) continue;
    BoundingBox bi = bounding_box(grid[i].polygon);
    for (CellIndex s : seed) {
      if (!bi.overlaps(bounding_box(grid[s].polygon))) continue;
      if (shared_boundary_length(grid[i].polygon, grid[s].polygon) > kMinSharedBoundaryM) {
        out.push_back(ci);
        break;
      }
    }
  }
  return out;
}

}  // namespace popdense
