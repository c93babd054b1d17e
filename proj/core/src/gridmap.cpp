#include "policylab/envs/gridmap.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace policylab {

GridMap GridMap::parse(const std::string& text) {
  GridMap map;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    if (map.cols == 0) {
      map.cols = static_cast<int>(line.size());
    } else if (static_cast<int>(line.size()) != map.cols) {
      throw std::invalid_argument("ragged map row: '" + line + "'");
    }
    for (char c : line) {
      if (c != 'A' && c != 'R' && c != '.' && c != 'S') {
        throw std::invalid_argument(std::string("unknown map cell '") + c + "'");
      }
    }
    map.cells += line;
    ++map.rows;
  }
  if (map.rows == 0) throw std::invalid_argument("empty map");
  return map;
}

GridMap GridMap::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::vector<int> GridMap::cells_of(char kind) const {
  std::vector<int> out;
  for (int i = 0; i < rows * cols; ++i) {
    if (cells[i] == kind) out.push_back(i);
  }
  return out;
}

std::vector<int> GridMap::label_components(char kind) const {
  std::vector<int> label(static_cast<std::size_t>(rows) * cols, -1);
  int next = 0;
  std::vector<int> stack;
  for (int i = 0; i < rows * cols; ++i) {
    if (cells[i] != kind || label[i] != -1) continue;
    stack.push_back(i);
    label[i] = next;
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      const int r = cur / cols, c = cur % cols;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int nr = r + dr, nc = c + dc;
          if (!in_bounds(nr, nc)) continue;
          const int ni = index(nr, nc);
          if (cells[ni] == kind && label[ni] == -1) {
            label[ni] = next;
            stack.push_back(ni);
          }
        }
      }
    }
    ++next;
  }
  return label;
}

const std::string& default_harvest_map() {
  static const std::string map =
      "............\n"
      ".AA......AA.\n"
      ".AAA....AAA.\n"
      ".A........A.\n"
      "...S....S...\n"
      ".....SS.....\n"
      ".....SS.....\n"
      "...S....S...\n"
      ".A........A.\n"
      ".AAA....AAA.\n"
      ".AA......AA.\n"
      "............\n";
  return map;
}

const std::string& default_cleanup_map() {
  static const std::string map =
      "RR............\n"
      "RR............\n"
      "RR..S....AAAA.\n"
      "RR..S....AAAA.\n"
      "RR..SS...AAAA.\n"
      "RR..SS...AAAA.\n"
      "RR..S....AAAA.\n"
      "RR..S....AAAA.\n"
      "RR............\n"
      "RR............\n";
  return map;
}

}  // namespace policylab
