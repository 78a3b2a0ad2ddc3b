#pragma once

#include "popdense/geometry.hpp"

#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace popdense {

struct Cell {
  CellId id;
  Polygon polygon;
  double surface_km2 = 0.0;
};

struct AdminArea {
  std::string id;
  Polygon polygon;
  double surface_km2 = 0.0;
  double population = 0.0;
};

/// Ordered collection of cells. Construction only indexes the cells; the
/// tessellation invariants are checked by validate_tessellation().
class GridTessellation {
 public:
  GridTessellation() = default;
  explicit GridTessellation(std::vector<Cell> cells);

  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  const Cell& operator[](std::size_t i) const { return cells_[i]; }

  std::optional<CellIndex> find(const CellId& id) const;
  CellIndex index_of(const CellId& id) const;

  // Stored surfaces in km^2, in cell order.
  const Vec& surfaces() const { return surfaces_; }

 private:
  std::vector<Cell> cells_;
  std::unordered_map<CellId, CellIndex> index_;
  Vec surfaces_;
};

/// Per-cell density (inhabitants/km^2) aligned with grid order; a timestamp
/// marks snapshots of a dynamic estimate.
struct PopulationDensityMap {
  Vec values;
  std::optional<Seconds> timestamp;
};

struct Overlap {
  std::size_t area;  // index into the area collection
  std::string area_id;
  double surface_km2 = 0.0;
};

// Overlaps below this floor are treated as numerical noise.
inline constexpr double kOverlapFloorKm2 = 1e-9;

std::vector<Overlap> intersect_area(const Cell& cell, std::span<const AdminArea> areas);

PopulationDensityMap census_to_grid(const GridTessellation& grid, std::span<const AdminArea> areas);

struct Violation {
  enum class Kind { DuplicateId, DegeneratePolygon, SurfaceMismatch, Overlap };
  Kind kind;
  CellId first;
  CellId second;  // only for overlaps
  double shared_km2 = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate_tessellation(const GridTessellation& grid);

// Throws GeometryError naming the first violation.
void require_valid(const GridTessellation& grid);
void require_valid(std::span<const AdminArea> areas);

std::vector<CellIndex> cells_intersecting(const GridTessellation& grid, const Polygon& region);

// Cells sharing a boundary of positive length with any cell of `seed`;
// the seed cells themselves are not included.
std::vector<CellIndex> adjacent_cells(const GridTessellation& grid, std::span<const CellIndex> seed);

}  // namespace popdense
