// Copyright 2026 The tower-conventions Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Grid-world physics for domino blocks: gravity drops, tower stimuli, scene
// composition and reconstruction scoring.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tower/common.hpp"

namespace tower {

enum class Orientation : std::uint8_t { horizontal, vertical };

inline char orientation_glyph(Orientation o) {
  return o == Orientation::horizontal ? 'H' : 'V';
}

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

/// A domino occupying two cells. (x, y) is the leftmost-bottom cell.
struct BlockPlacement {
  int x = 0;
  int y = 0;
  Orientation orientation = Orientation::horizontal;

  std::array<Cell, 2> cells() const {
    if (orientation == Orientation::horizontal) return {{{x, y}, {x + 1, y}}};
    return {{{x, y}, {x, y + 1}}};
  }

  int right() const { return orientation == Orientation::horizontal ? x + 1 : x; }
  int top() const { return orientation == Orientation::vertical ? y + 1 : y; }

  BlockPlacement translated(int dx, int dy = 0) const {
    return {x + dx, y + dy, orientation};
  }

  auto operator<=>(const BlockPlacement&) const = default;
};

inline BlockPlacement H(int x, int y) { return {x, y, Orientation::horizontal}; }
inline BlockPlacement V(int x, int y) { return {x, y, Orientation::vertical}; }

inline std::string to_string(const BlockPlacement& b) {
  std::ostringstream os;
  os << orientation_glyph(b.orientation) << '(' << b.x << ',' << b.y << ')';
  return os.str();
}

/// Builder's working grid. Placements are append-only.
struct GridState {
  int width = 0;
  int height = 0;
  std::vector<int> column_heights;
  std::vector<BlockPlacement> placements;

  static GridState empty(int width, int height) {
    if (width < 2 || height < 2)
      throw GeometryError("grid must be at least 2x2, got " +
                          std::to_string(width) + "x" + std::to_string(height));
    GridState g;
    g.width = width;
    g.height = height;
    g.column_heights.assign(static_cast<std::size_t>(width), 0);
    return g;
  }

  bool occupied(Cell c) const {
    for (const auto& p : placements)
      for (const auto& pc : p.cells())
        if (pc == c) return true;
    return false;
  }

  bool operator==(const GridState&) const = default;
};

/// Whether a block of the given orientation can be dropped at column x.
inline bool drop_fits(const GridState& grid, Orientation orientation, int x) {
  if (x < 0 || x >= grid.width) return false;
  if (orientation == Orientation::horizontal && x + 1 >= grid.width) return false;
  int rest = grid.column_heights[static_cast<std::size_t>(x)];
  if (orientation == Orientation::horizontal)
    rest = std::max(rest, grid.column_heights[static_cast<std::size_t>(x + 1)]);
  const int top = orientation == Orientation::vertical ? rest + 1 : rest;
  return top < grid.height;
}

/// Drops a block in place and returns where it came to rest.
inline BlockPlacement drop_block_inplace(GridState& grid, Orientation orientation,
                                         int x) {
  if (x < 0 || x >= grid.width ||
      (orientation == Orientation::horizontal && x + 1 >= grid.width))
    throw GeometryError("drop column " + std::to_string(x) +
                        " out of bounds for " +
                        (orientation == Orientation::horizontal ? "horizontal"
                                                                : "vertical") +
                        " block");
  auto& heights = grid.column_heights;
  const auto ux = static_cast<std::size_t>(x);
  int rest = heights[ux];
  if (orientation == Orientation::horizontal) rest = std::max(rest, heights[ux + 1]);
  const BlockPlacement placed{x, rest, orientation};
  if (placed.top() >= grid.height)
    throw GeometryError("block at column " + std::to_string(x) +
                        " would exceed grid height");
  for (const auto& c : placed.cells())
    heights[static_cast<std::size_t>(c.x)] =
        std::max(heights[static_cast<std::size_t>(c.x)], c.y + 1);
  grid.placements.push_back(placed);
  return placed;
}

/// Pure form: the block rests on the highest column it covers.
inline GridState drop_block(GridState grid, Orientation orientation, int x) {
  drop_block_inplace(grid, orientation, x);
  return grid;
}

/// An unordered set of blocks on a grid of fixed extent.
class Scene {
 public:
  Scene() = default;

  Scene(int width, int height, std::vector<BlockPlacement> blocks)
      : width_(width), height_(height), blocks_(std::move(blocks)) {
    std::sort(blocks_.begin(), blocks_.end());
    std::set<Cell> seen;
    for (const auto& b : blocks_) {
      for (const auto& c : b.cells()) {
        if (c.x < 0 || c.y < 0 || c.x >= width_ || c.y >= height_)
          throw GeometryError("block " + to_string(b) + " outside " +
                              std::to_string(width_) + "x" +
                              std::to_string(height_) + " grid");
        if (!seen.insert(c).second)
          throw GeometryError("block " + to_string(b) + " overlaps another block");
      }
    }
  }

  static Scene from_grid(const GridState& grid) {
    return Scene(grid.width, grid.height, grid.placements);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<BlockPlacement>& blocks() const { return blocks_; }
  std::size_t size() const { return blocks_.size(); }
  bool empty() const { return blocks_.empty(); }

  bool contains(const BlockPlacement& b) const {
    return std::binary_search(blocks_.begin(), blocks_.end(), b);
  }

  bool operator==(const Scene&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<BlockPlacement> blocks_;
};

enum class TowerId : std::uint8_t { A, B, C };

inline constexpr std::array<TowerId, 3> kTowerIds{TowerId::A, TowerId::B, TowerId::C};

inline char tower_letter(TowerId id) { return static_cast<char>('A' + static_cast<int>(id)); }

inline TowerId tower_from_letter(std::string_view s) {
  if (s == "A") return TowerId::A;
  if (s == "B") return TowerId::B;
  if (s == "C") return TowerId::C;
  throw ConfigError("unknown tower id '" + std::string(s) + "'");
}

/// Four blocks, two of each orientation, in tower-local coordinates.
struct TowerStimulus {
  TowerId id = TowerId::A;
  std::string name;
  std::vector<BlockPlacement> blocks;

  int width() const {
    int w = 0;
    for (const auto& b : blocks) w = std::max(w, b.right() + 1);
    return w;
  }
  int height() const {
    int h = 0;
    for (const auto& b : blocks) h = std::max(h, b.top() + 1);
    return h;
  }
};

/// Throws unless the tower has exactly 2 vertical and 2 horizontal blocks.
inline void check_tower_shape(const TowerStimulus& t) {
  if (t.blocks.size() != 4)
    throw GeometryError("tower " + t.name + " must have 4 blocks");
  const auto verticals = std::count_if(t.blocks.begin(), t.blocks.end(), [](const auto& b) {
    return b.orientation == Orientation::vertical;
  });
  if (verticals != 2)
    throw GeometryError("tower " + t.name + " must have 2 vertical and 2 horizontal blocks");
  for (const auto& b : t.blocks)
    if (b.x < 0 || b.y < 0)
      throw GeometryError("tower " + t.name + " has negative local coordinates");
}

/// Grid extent and tower origins used to compose a two-tower scene.
struct SceneConfig {
  int width = 12;
  int height = 8;
  int left_origin = 1;
  int right_origin = 7;
};

/// The three default tower stimuli, in slot-local coordinates. All three
/// start with the same ground pair (a vertical post with a horizontal foot to
/// its right). Each sits at its own column inside the slot, so the hand move
/// between the two towers of a scene depends on which tower is on the right.
inline std::vector<TowerStimulus> stimulus_towers() {
  return {
      {TowerId::A, "L", {V(0, 0), H(1, 0), H(1, 1), V(0, 2)}},
      {TowerId::B, "C", {V(2, 0), H(3, 0), V(2, 2), H(2, 4)}},
      {TowerId::C, "O", {V(1, 0), H(2, 0), V(3, 1), H(1, 2)}},
  };
}

inline const TowerStimulus& find_tower(const std::vector<TowerStimulus>& towers,
                                       TowerId id) {
  for (const auto& t : towers)
    if (t.id == id) return t;
  throw ConfigError(std::string("no stimulus with id ") + tower_letter(id));
}

inline Scene tower_scene(const TowerStimulus& t, int origin, const SceneConfig& cfg) {
  std::vector<BlockPlacement> blocks;
  for (const auto& b : t.blocks) blocks.push_back(b.translated(origin));
  return Scene(cfg.width, cfg.height, std::move(blocks));
}

inline Scene compose_scene(const TowerStimulus& left, const TowerStimulus& right,
                           const SceneConfig& cfg = {}) {
  std::vector<BlockPlacement> blocks;
  for (const auto& b : left.blocks) blocks.push_back(b.translated(cfg.left_origin));
  for (const auto& b : right.blocks) blocks.push_back(b.translated(cfg.right_origin));
  return Scene(cfg.width, cfg.height, std::move(blocks));
}

/// Harmonic mean of block precision and recall. Blocks match only on exact
/// position and orientation.
inline double f1_score(const Scene& target, const Scene& built) {
  if (target.empty() && built.empty()) return 1.0;
  if (target.empty() || built.empty()) return 0.0;
  std::size_t tp = 0;
  for (const auto& b : built.blocks())
    if (target.contains(b)) ++tp;
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(built.size());
  const double recall = static_cast<double>(tp) / static_cast<double>(target.size());
  return 2.0 * precision * recall / (precision + recall);
}

/// One character per cell, top row first: 'H' and 'V' for block cells,
/// '.' for empty.
inline std::string render_ascii(const Scene& scene) {
  std::vector<std::string> rows(static_cast<std::size_t>(scene.height()),
                                std::string(static_cast<std::size_t>(scene.width()), '.'));
  for (const auto& b : scene.blocks())
    for (const auto& c : b.cells())
      rows[static_cast<std::size_t>(c.y)][static_cast<std::size_t>(c.x)] =
          orientation_glyph(b.orientation);
  std::string out;
  for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
    out += *it;
    out += '\n';
  }
  return out;
}

/// Inverse of render_ascii. Runs of 'H' pair up from the left and runs of
/// 'V' pair up from the bottom.
inline Scene parse_ascii(std::string_view text) {
  std::vector<std::string> rows;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(line);
  if (rows.empty()) throw GeometryError("empty rendering");
  const int height = static_cast<int>(rows.size());
  const int width = static_cast<int>(rows.front().size());
  auto at = [&](int x, int y) -> char& {
    return rows[static_cast<std::size_t>(height - 1 - y)][static_cast<std::size_t>(x)];
  };
  for (const auto& r : rows)
    if (static_cast<int>(r.size()) != width) throw GeometryError("ragged rendering");
  std::vector<BlockPlacement> blocks;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      char& c = at(x, y);
      if (c == 'H') {
        if (x + 1 >= width || at(x + 1, y) != 'H')
          throw GeometryError("unpaired horizontal cell");
        at(x + 1, y) = '.';
        blocks.push_back(H(x, y));
      } else if (c == 'V') {
        if (y + 1 >= height || at(x, y + 1) != 'V')
          throw GeometryError("unpaired vertical cell");
        at(x, y + 1) = '.';
        blocks.push_back(V(x, y));
      } else if (c != '.') {
        throw GeometryError(std::string("unexpected glyph '") + c + "'");
      }
      c = '.';
    }
  }
  return Scene(width, height, std::move(blocks));
}

}  // namespace tower
