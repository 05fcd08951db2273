#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "qcm/errors.hpp"
#include "qcm/rng.hpp"

// Procedural labyrinth levels: a seeded depth-first backtracker carves a
// perfect maze on a square grid that grows with the level number, then the
// door, keys (one per level number) and the bonus are placed on distinct
// cells drawn from the same seeded stream. Identical (seed, level) inputs
// regenerate identical levels.

namespace qcm::maze {

inline constexpr int kMinLevel = 1;
inline constexpr int kMaxLevel = 5;

enum class Direction : int { north = 0, east = 1, south = 2, west = 3 };

inline constexpr Direction opposite(Direction d) {
  switch (d) {
    case Direction::north: return Direction::south;
    case Direction::east: return Direction::west;
    case Direction::south: return Direction::north;
    case Direction::west: return Direction::east;
  }
  return Direction::north;
}

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

inline constexpr Cell step(Cell c, Direction d) {
  switch (d) {
    case Direction::north: return {c.x, c.y - 1};
    case Direction::east: return {c.x + 1, c.y};
    case Direction::south: return {c.x, c.y + 1};
    case Direction::west: return {c.x - 1, c.y};
  }
  return c;
}

inline constexpr int grid_size_for_level(int level_number) {
  return 9 + 2 * (level_number - 1);  // 9x9 at level 1 up to 17x17 at level 5
}

struct MazeLevel {
  int level_number = 1;
  int width = 0;
  int height = 0;
  std::uint64_t seed = 0;
  int style_index = 1;  // cosmetic tier (wall art / music layering)
  std::vector<std::uint8_t> open_walls;  // bit per Direction, open = passable
  Cell spawn;
  Cell door;
  std::vector<Cell> keys;  // |keys| == level_number
  std::optional<Cell> bonus;

  bool in_bounds(Cell c) const { return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height; }
  int cell_index(Cell c) const { return c.y * width + c.x; }

  bool is_open(Cell c, Direction d) const {
    if (!in_bounds(c)) return false;
    return (open_walls[static_cast<std::size_t>(cell_index(c))] >>
            static_cast<int>(d)) & 1u;
  }

  bool operator==(const MazeLevel&) const = default;
};

namespace detail {

inline void carve(MazeLevel& lvl, rng::Engine& eng) {
  const int n = lvl.width * lvl.height;
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  std::vector<Cell> stack;
  Cell cur{0, 0};
  visited[static_cast<std::size_t>(lvl.cell_index(cur))] = 1;
  stack.push_back(cur);
  while (!stack.empty()) {
    cur = stack.back();
    Direction options[4];
    int count = 0;
    for (int d = 0; d < 4; ++d) {
      const Cell nb = step(cur, static_cast<Direction>(d));
      if (lvl.in_bounds(nb) && !visited[static_cast<std::size_t>(lvl.cell_index(nb))])
        options[count++] = static_cast<Direction>(d);
    }
    if (count == 0) {
      stack.pop_back();
      continue;
    }
    const Direction dir = options[eng.below(static_cast<std::uint64_t>(count))];
    const Cell nb = step(cur, dir);
    lvl.open_walls[static_cast<std::size_t>(lvl.cell_index(cur))] |=
        static_cast<std::uint8_t>(1u << static_cast<int>(dir));
    lvl.open_walls[static_cast<std::size_t>(lvl.cell_index(nb))] |=
        static_cast<std::uint8_t>(1u << static_cast<int>(opposite(dir)));
    visited[static_cast<std::size_t>(lvl.cell_index(nb))] = 1;
    stack.push_back(nb);
  }
}

}  // namespace detail

// Cells reachable from `from` over open walls; flat vector indexed by cell.
inline std::vector<char> reachable_from(const MazeLevel& lvl, Cell from) {
  std::vector<char> seen(static_cast<std::size_t>(lvl.width * lvl.height), 0);
  std::queue<Cell> q;
  seen[static_cast<std::size_t>(lvl.cell_index(from))] = 1;
  q.push(from);
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop();
    for (int d = 0; d < 4; ++d) {
      if (!lvl.is_open(c, static_cast<Direction>(d))) continue;
      const Cell nb = step(c, static_cast<Direction>(d));
      auto& flag = seen[static_cast<std::size_t>(lvl.cell_index(nb))];
      if (!flag) {
        flag = 1;
        q.push(nb);
      }
    }
  }
  return seen;
}

// Breadth-first shortest path as a direction sequence; empty when from == to.
inline std::vector<Direction> shortest_path(const MazeLevel& lvl, Cell from, Cell to) {
  if (from == to) return {};
  const int n = lvl.width * lvl.height;
  std::vector<int> prev(static_cast<std::size_t>(n), -1);
  std::vector<Direction> how(static_cast<std::size_t>(n), Direction::north);
  std::queue<Cell> q;
  prev[static_cast<std::size_t>(lvl.cell_index(from))] = lvl.cell_index(from);
  q.push(from);
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop();
    if (c == to) break;
    for (int d = 0; d < 4; ++d) {
      if (!lvl.is_open(c, static_cast<Direction>(d))) continue;
      const Cell nb = step(c, static_cast<Direction>(d));
      auto& p = prev[static_cast<std::size_t>(lvl.cell_index(nb))];
      if (p < 0) {
        p = lvl.cell_index(c);
        how[static_cast<std::size_t>(lvl.cell_index(nb))] = static_cast<Direction>(d);
        q.push(nb);
      }
    }
  }
  if (prev[static_cast<std::size_t>(lvl.cell_index(to))] < 0)
    throw PreconditionError("no path between cells");
  std::vector<Direction> path;
  int at = lvl.cell_index(to);
  const int start = lvl.cell_index(from);
  while (at != start) {
    path.push_back(how[static_cast<std::size_t>(at)]);
    at = prev[static_cast<std::size_t>(at)];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

inline MazeLevel generate_maze(std::uint64_t seed, int level_number) {
  if (level_number < kMinLevel || level_number > kMaxLevel)
    throw ValidationError("level_number " + std::to_string(level_number) + " outside 1..5");
  MazeLevel lvl;
  lvl.level_number = level_number;
  lvl.width = lvl.height = grid_size_for_level(level_number);
  lvl.seed = seed;
  lvl.style_index = level_number;
  lvl.open_walls.assign(static_cast<std::size_t>(lvl.width * lvl.height), 0);

  rng::Engine eng(rng::derive(seed, static_cast<std::uint64_t>(level_number)));
  detail::carve(lvl, eng);

  lvl.spawn = {0, 0};
  auto draw_free = [&](const std::vector<Cell>& taken) {
    for (;;) {
      const Cell c{static_cast<int>(eng.below(static_cast<std::uint64_t>(lvl.width))),
                   static_cast<int>(eng.below(static_cast<std::uint64_t>(lvl.height)))};
      if (c == lvl.spawn) continue;
      if (std::find(taken.begin(), taken.end(), c) != taken.end()) continue;
      return c;
    }
  };

  std::vector<Cell> taken;
  lvl.door = draw_free(taken);
  taken.push_back(lvl.door);
  for (int k = 0; k < level_number; ++k) {
    const Cell c = draw_free(taken);
    lvl.keys.push_back(c);
    taken.push_back(c);
  }
  lvl.bonus = draw_free(taken);
  return lvl;
}

}  // namespace qcm::maze
