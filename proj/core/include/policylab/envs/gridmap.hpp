#pragma once

#include <string>
#include <vector>

namespace policylab {

// Plain-text map, one character per cell: A=apple, R=river, .=floor, S=spawn.
struct GridMap {
  int rows = 0;
  int cols = 0;
  std::string cells;  // row-major

  static GridMap parse(const std::string& text);
  static GridMap load_file(const std::string& path);

  char at(int r, int c) const { return cells[static_cast<std::size_t>(r) * cols + c]; }
  bool in_bounds(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }
  int index(int r, int c) const { return r * cols + c; }

  std::vector<int> cells_of(char kind) const;
  // 8-connected components over cells of the given kind; -1 elsewhere.
  std::vector<int> label_components(char kind) const;
};

const std::string& default_harvest_map();
const std::string& default_cleanup_map();

}  // namespace policylab
