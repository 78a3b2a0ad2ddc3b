#pragma once

#include "popdense/grid.hpp"

#include <doctest.h>

#include <string>
#include <vector>

namespace testing {

using namespace popdense;

// cols x rows square cells of `size_m` metres, ids "c<index>", row-major.
inline GridTessellation square_grid(int cols, int rows, double size_m = 1000.0) {
  std::vector<Cell> cells;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      Polygon p = rectangle(c * size_m, r * size_m, (c + 1) * size_m, (r + 1) * size_m);
      cells.push_back({"c" + std::to_string(r * cols + c), p, area_km2(p)});
    }
  return GridTessellation(std::move(cells));
}

inline Cell cell(std::string id, double x0, double y0, double x1, double y1) {
  Polygon p = rectangle(x0, y0, x1, y1);
  return {std::move(id), p, area_km2(p)};
}

inline AdminArea area(std::string id, double x0, double y0, double x1, double y1, double population) {
  Polygon p = rectangle(x0, y0, x1, y1);
  return {std::move(id), p, area_km2(p), population};
}

}  // namespace testing
