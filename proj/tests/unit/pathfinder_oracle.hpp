#pragma once

// Independent re-derivation of the movement rules used as a test oracle.
// Shares no code with the library's move graph.

#include <algorithm>
#include <bitset>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "levelseq/level.hpp"
#include "levelseq/pathfinder.hpp"

namespace oracle {

using levelseq::Cell;
using levelseq::Tile;
using levelseq::TileGrid;

inline bool blocking(Tile t) {
  switch (t) {
    case Tile::Solid:
    case Tile::DestructibleBlock:
    case Tile::QuestionCoin:
    case Tile::QuestionPowerup:
    case Tile::BulletTop:
    case Tile::BulletColumn:
    case Tile::PipeLeft:
    case Tile::PipeRight:
    case Tile::PipeTopLeft:
    case Tile::PipeTopRight:
      return true;
    default:
      return false;
  }
}

inline bool open_cell(const TileGrid& g, Cell c) {
  return c.col >= 0 && c.col < g.width() && c.row >= 0 && c.row < 16 && !blocking(g.at(c));
}

inline bool standable(const TileGrid& g, Cell c) {
  return open_cell(g, c) && c.row < 15 && blocking(g.at(c.col, c.row + 1));
}

// a exclusive, b inclusive
inline std::vector<Cell> line(Cell a, Cell b) {
  std::vector<Cell> out;
  const int dc = b.col - a.col, dr = b.row - a.row;
  const int n = std::max(std::abs(dc), std::abs(dr));
  for (int k = 1; k <= n; ++k) {
    out.push_back({a.col + static_cast<int>(std::lround(static_cast<double>(dc) * k / n)),
                   a.row + static_cast<int>(std::lround(static_cast<double>(dr) * k / n))});
  }
  return out;
}

struct Edge {
  Cell from, to;
  int cost = 1;
  bool jump = false;
  std::vector<Cell> path;   // canonical airborne cells
  std::set<Cell> reach;     // all airborne cells over feasible arcs
};

struct Graph {
  int width = 0;
  std::optional<Cell> start;
  std::vector<Edge> edges;

  bool goal(Cell c) const { return c.col == width - 1; }
};

inline Graph build(const TileGrid& g, const levelseq::MovementModel& model) {
  Graph G;
  G.width = g.width();
  for (int r = 15; r >= 0 && !G.start; --r) {
    if (standable(g, {0, r})) G.start = Cell{0, r};
  }
  int top = 1;
  for (auto a : model.arcs()) top = std::max(top, -a.dy);

  for (int c = 0; c < g.width(); ++c) {
    for (int r = 0; r < 16; ++r) {
      const Cell s{c, r};
      if (!standable(g, s)) continue;
      for (int d : {-1, 1}) {
        if (standable(g, {c + d, r})) G.edges.push_back({s, {c + d, r}, 1, false, {}, {}});
      }
      for (auto a : model.arcs()) {
        const Cell t{c + a.dx, r + a.dy};
        if (!standable(g, t)) continue;
        Edge e{s, t, std::max(1, std::abs(a.dx)), true, {}, {}};
        bool any = false;
        for (int h = std::max(1, -a.dy); h <= top; ++h) {
          const Cell apex{c + a.dx / 2, r - h};
          if (apex.row < 0) continue;
          auto cells = line(s, apex);
          auto rest = line(apex, t);
          cells.insert(cells.end(), rest.begin(), rest.end() - 1);
          if (!std::all_of(cells.begin(), cells.end(), [&](Cell x) { return open_cell(g, x); })) continue;
          if (!any) e.path = cells;
          any = true;
          e.reach.insert(cells.begin(), cells.end());
        }
        if (any) G.edges.push_back(std::move(e));
      }
      // falls
      for (int d : {1, -1}) {
        const Cell first{c + d, r};
        if (!open_cell(g, first) || standable(g, first)) continue;
        // airborne[row] = columns of non-supported open cells reached in the cone
        std::map<Cell, Cell> parent;
        std::vector<int> layer{first.col};
        for (int row = r + 1; row < 16 && !layer.empty(); ++row) {
          std::vector<int> next;
          for (int col = 0; col < g.width(); ++col) {
            const Cell x{col, row};
            if (!open_cell(g, x)) continue;
            std::optional<int> p;
            for (int pc : {col, col - d, col + d}) {
              if (std::count(layer.begin(), layer.end(), pc)) {
                p = pc;
                break;
              }
            }
            if (!p) continue;
            parent[x] = {*p, row - 1};
            if (standable(g, x)) {
              Edge e{s, x, std::max(1, std::abs(col - c)), false, {}, {}};
              for (Cell y = parent[x];; y = parent[y]) {
                e.path.insert(e.path.begin(), y);
                if (y == first) break;
              }
              e.reach.insert(e.path.begin(), e.path.end());
              G.edges.push_back(std::move(e));
            } else {
              next.push_back(col);
            }
          }
          layer = next;
        }
      }
    }
  }
  return G;
}

inline constexpr int kInf = std::numeric_limits<int>::max() / 4;

// Bellman-Ford to a fixpoint.
inline std::map<Cell, int> costs_from_start(const Graph& G) {
  std::map<Cell, int> g;
  if (!G.start) return g;
  g[*G.start] = 0;
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& e : G.edges) {
      auto it = g.find(e.from);
      if (it == g.end()) continue;
      auto [jt, inserted] = g.try_emplace(e.to, kInf);
      if (it->second + e.cost < jt->second) {
        jt->second = it->second + e.cost;
        changed = true;
      }
    }
  }
  return g;
}

inline std::map<Cell, int> costs_to_goal(const Graph& G) {
  std::map<Cell, int> h;
  for (const auto& e : G.edges) {
    if (G.goal(e.from)) h[e.from] = 0;
    if (G.goal(e.to)) h[e.to] = 0;
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& e : G.edges) {
      auto it = h.find(e.to);
      if (it == h.end()) continue;
      auto [jt, inserted] = h.try_emplace(e.from, kInf);
      if (it->second + e.cost < jt->second) {
        jt->second = it->second + e.cost;
        changed = true;
      }
    }
  }
  return h;
}

inline std::optional<int> optimal_cost(const Graph& G) {
  auto g = costs_from_start(G);
  std::optional<int> best;
  for (auto [c, v] : g) {
    if (G.goal(c) && (!best || v < *best)) best = v;
  }
  return best;
}

// Fewest jumps among minimum-cost paths: lexicographic Bellman-Ford.
inline std::optional<std::pair<int, int>> optimal_cost_and_jumps(const Graph& G) {
  std::map<Cell, std::pair<int, int>> g;
  if (!G.start) return std::nullopt;
  g[*G.start] = {0, 0};
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& e : G.edges) {
      auto it = g.find(e.from);
      if (it == g.end()) continue;
      std::pair<int, int> cand{it->second.first + e.cost, it->second.second + (e.jump ? 1 : 0)};
      auto [jt, inserted] = g.try_emplace(e.to, std::pair{kInf, kInf});
      if (cand < jt->second) {
        jt->second = cand;
        changed = true;
      }
    }
  }
  std::optional<std::pair<int, int>> best;
  for (auto [c, v] : g) {
    if (G.goal(c) && (!best || v < *best)) best = v;
  }
  return best;
}

// Every cell on some start-to-goal path of cost <= bound, found by
// exhaustive enumeration of paths, memoized on (state, cost so far).
inline std::set<Cell> paths_within(const Graph& G, int bound) {
  using Bits = std::bitset<64 * 16>;
  auto bit = [](Cell c) { return static_cast<std::size_t>(c.col * 16 + c.row); };
  std::map<Cell, std::vector<const Edge*>> out;
  for (const auto& e : G.edges) out[e.from].push_back(&e);
  std::map<std::pair<Cell, int>, std::optional<Bits>> memo;

  auto rec = [&](auto&& self, Cell n, int cost) -> std::optional<Bits> {
    auto key = std::pair{n, cost};
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::optional<Bits> acc;
    if (G.goal(n)) {
      acc = Bits{};
      acc->set(bit(n));
    }
    for (const Edge* e : out[n]) {
      if (cost + e->cost > bound) continue;
      auto sub = self(self, e->to, cost + e->cost);
      if (!sub) continue;
      if (!acc) acc = Bits{};
      *acc |= *sub;
      acc->set(bit(n));
      for (Cell c : e->path) acc->set(bit(c));
    }
    memo[key] = acc;
    return acc;
  };

  std::set<Cell> cells;
  if (!G.start) return cells;
  auto all = rec(rec, *G.start, 0);
  if (!all) return cells;
  for (int c = 0; c < G.width; ++c) {
    for (int r = 0; r < 16; ++r) {
      if ((*all)[bit({c, r})]) cells.insert({c, r});
    }
  }
  return cells;
}

// Cells occupied by an agent exploring everything from the start.
struct Closure {
  std::set<Cell> states;
  std::set<Cell> cells;
};

inline Closure closure(const Graph& G) {
  Closure out;
  if (!G.start) return out;
  std::vector<Cell> todo{*G.start};
  out.states.insert(*G.start);
  while (!todo.empty()) {
    Cell n = todo.back();
    todo.pop_back();
    out.cells.insert(n);
    for (const auto& e : G.edges) {
      if (!(e.from == n)) continue;
      out.cells.insert(e.reach.begin(), e.reach.end());
      if (out.states.insert(e.to).second) todo.push_back(e.to);
    }
  }
  return out;
}

inline std::set<Cell> only_air(const TileGrid& g, const std::set<Cell>& cells) {
  std::set<Cell> out;
  for (Cell c : cells) {
    if (g.at(c) == Tile::Empty || g.at(c) == Tile::PathMarker) out.insert(c);
  }
  return out;
}

}  // namespace oracle
