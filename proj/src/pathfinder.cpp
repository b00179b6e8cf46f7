#include "levelseq/pathfinder.hpp"

#include <algorithm>
#include <cstdlib>
#include <queue>
#include <sstream>
#include <tuple>

#include <fmt/core.h>

#include "levelseq/error.hpp"

namespace levelseq {

namespace {

// Round p/n half away from zero, n > 0.
int round_div(int p, int n) {
  return p >= 0 ? (2 * p + n) / (2 * n) : -((-2 * p + n) / (2 * n));
}

// Cells from a (exclusive) to b (inclusive) along a straight line.
void rasterize(Cell a, Cell b, std::vector<Cell>& out) {
  const int dc = b.col - a.col;
  const int dr = b.row - a.row;
  const int n = std::max(std::abs(dc), std::abs(dr));
  for (int k = 1; k <= n; ++k) {
    out.push_back({a.col + round_div(dc * k, n), a.row + round_div(dr * k, n)});
  }
}

bool passable(const TileGrid& g, Cell c) {
  return g.in_bounds(c.col, c.row) && !is_solid(g.at(c));
}

bool supported(const TileGrid& g, Cell c) {
  return passable(g, c) && c.row + 1 < kLevelHeight &&
         is_solid(g.at(c.col, c.row + 1));
}

// Airborne cells of a jump from `from` to `to` whose apex is `height` rows
// above the takeoff, or nullopt if the arc is blocked.
std::optional<std::vector<Cell>> jump_trajectory(const TileGrid& g, Cell from,
                                                 Cell to, int dx, int height) {
  const Cell apex{from.col + dx / 2, from.row - height};
  if (apex.row < 0) return std::nullopt;
  std::vector<Cell> cells;
  rasterize(from, apex, cells);
  rasterize(apex, to, cells);
  cells.pop_back();  // landing
  for (Cell c : cells) {
    if (!passable(g, c)) return std::nullopt;
  }
  return cells;
}

}  // namespace

MovementModel::MovementModel() : MovementModel(default_table()) {}

MovementModel::MovementModel(std::vector<ArcOffset> arcs) : arcs_(std::move(arcs)) {
  for (const auto& a : arcs_) {
    if (a.dx == 0) {
      throw Error(ErrorCode::BadArcTable,
                  fmt::format("arc ({}, {}) has no horizontal component", a.dx,
                              a.dy));
    }
    if (std::abs(a.dx) >= kLevelHeight * 4 || std::abs(a.dy) >= kLevelHeight) {
      throw Error(ErrorCode::BadArcTable,
                  fmt::format("arc ({}, {}) is out of range", a.dx, a.dy));
    }
    max_span_ = std::max(max_span_, std::abs(a.dx));
    max_jump_height_ = std::max(max_jump_height_, -a.dy);
  }
  max_jump_height_ = std::max(max_jump_height_, 1);
}

MovementModel MovementModel::default_table(int max_span, int max_rise) {
  std::vector<ArcOffset> arcs;
  for (int dx = -max_span; dx <= max_span; ++dx) {
    if (dx == 0) continue;
    for (int dy = -max_rise; dy <= max_rise; ++dy) arcs.push_back({dx, dy});
  }
  return MovementModel(std::move(arcs));
}

MovementModel MovementModel::from_text(std::string_view text) {
  std::vector<ArcOffset> arcs;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    ArcOffset a;
    if (!(ls >> a.dx)) continue;
    std::string rest;
    if (!(ls >> a.dy) || (ls >> rest)) {
      throw Error(ErrorCode::BadArcTable,
                  fmt::format("arc table line {}: expected 'dx dy'", lineno));
    }
    arcs.push_back(a);
  }
  if (arcs.empty()) throw Error(ErrorCode::BadArcTable, "arc table is empty");
  return MovementModel(std::move(arcs));
}

MovementModel MovementModel::from_file(const std::filesystem::path& path) {
  return from_text(read_text_file(path));
}

std::string MovementModel::to_text() const {
  std::string out = "# dx dy (negative dy is upward)\n";
  for (const auto& a : arcs_) out += fmt::format("{} {}\n", a.dx, a.dy);
  return out;
}

MoveGraph::MoveGraph(const TileGrid& grid, const MovementModel& model)
    : width_(grid.width()),
      state_(static_cast<std::size_t>(grid.width()) * kLevelHeight, false) {
  for (int c = 0; c < width_; ++c) {
    for (int r = 0; r < kLevelHeight; ++r) {
      state_[static_cast<std::size_t>(node({c, r}))] = supported(grid, {c, r});
    }
  }
  for (int r = kLevelHeight - 1; r >= 0; --r) {
    if (state_[static_cast<std::size_t>(node({0, r}))]) {
      start_ = node({0, r});
      break;
    }
  }

  out_offsets_.assign(static_cast<std::size_t>(num_nodes()) + 1, 0);
  reach_offsets_.push_back(0);
  for (int n = 0; n < num_nodes(); ++n) {
    out_offsets_[static_cast<std::size_t>(n)] =
        static_cast<std::uint32_t>(moves_.size());
    if (is_state(n)) add_moves_from(grid, model, cell(n));
  }
  out_offsets_.back() = static_cast<std::uint32_t>(moves_.size());
  out_index_.resize(moves_.size());
  for (std::uint32_t i = 0; i < moves_.size(); ++i) out_index_[i] = i;

  // Reverse adjacency, stable in move order.
  in_offsets_.assign(static_cast<std::size_t>(num_nodes()) + 1, 0);
  for (const auto& m : moves_) ++in_offsets_[static_cast<std::size_t>(node(m.to)) + 1];
  for (std::size_t i = 1; i < in_offsets_.size(); ++i) in_offsets_[i] += in_offsets_[i - 1];
  in_index_.resize(moves_.size());
  std::vector<std::uint32_t> fill(in_offsets_.begin(), in_offsets_.end() - 1);
  for (std::uint32_t i = 0; i < moves_.size(); ++i) {
    in_index_[fill[static_cast<std::size_t>(node(moves_[i].to))]++] = i;
  }
}

void MoveGraph::add_moves_from(const TileGrid& grid, const MovementModel& model,
                               Cell from) {
  auto push = [&](Move m, const std::vector<Cell>& reach) {
    moves_.push_back(std::move(m));
    reach_pool_.insert(reach_pool_.end(), reach.begin(), reach.end());
    reach_offsets_.push_back(static_cast<std::uint32_t>(reach_pool_.size()));
  };

  for (int s : {1, -1}) {
    Cell to{from.col + s, from.row};
    if (supported(grid, to)) push(Move{MoveKind::Walk, from, to, 1, -1, {}}, {});
  }

  const auto& arcs = model.arcs();
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    const auto [dx, dy] = arcs[i];
    Cell to{from.col + dx, from.row + dy};
    if (!supported(grid, to)) continue;
    std::optional<std::vector<Cell>> canonical;
    std::vector<Cell> reach;
    for (int h = std::max(1, -dy); h <= model.max_jump_height(); ++h) {
      auto cells = jump_trajectory(grid, from, to, dx, h);
      if (!cells) continue;
      if (!canonical) canonical = *cells;
      reach.insert(reach.end(), cells->begin(), cells->end());
    }
    if (!canonical) continue;
    std::sort(reach.begin(), reach.end());
    reach.erase(std::unique(reach.begin(), reach.end()), reach.end());
    push(Move{MoveKind::Jump, from, to, std::max(1, std::abs(dx)),
              static_cast<int>(i), std::move(*canonical)},
         reach);
  }

  // Step off an edge and fall, drifting at most one column per row.
  for (int s : {1, -1}) {
    Cell first{from.col + s, from.row};
    if (!passable(grid, first) || supported(grid, first)) continue;
    // parent column per (row, col) within the fall cone
    std::vector<int> parent(static_cast<std::size_t>(num_nodes()), -2);
    std::vector<int> layer{first.col};
    parent[static_cast<std::size_t>(node(first))] = -1;
    std::vector<Cell> landings;
    for (int row = first.row; row + 1 < kLevelHeight && !layer.empty(); ++row) {
      std::vector<int> next;
      const int lo = *std::min_element(layer.begin(), layer.end()) - 1;
      const int hi = *std::max_element(layer.begin(), layer.end()) + 1;
      for (int col = lo; col <= hi; ++col) {
        Cell c{col, row + 1};
        if (!passable(grid, c)) continue;
        int chosen = -2;
        for (int pc : {col, col - s, col + s}) {
          if (std::find(layer.begin(), layer.end(), pc) != layer.end()) {
            chosen = pc;
            break;
          }
        }
        if (chosen == -2) continue;
        parent[static_cast<std::size_t>(node(c))] = chosen;
        if (supported(grid, c)) {
          landings.push_back(c);
        } else {
          next.push_back(col);
        }
      }
      layer = std::move(next);
    }
    for (Cell land : landings) {
      std::vector<Cell> path;
      Cell cur = land;
      while (true) {
        int pc = parent[static_cast<std::size_t>(node(cur))];
        if (pc == -1) break;
        cur = {pc, cur.row - 1};
        path.push_back(cur);
      }
      std::reverse(path.begin(), path.end());
      push(Move{MoveKind::Fall, from, land, std::max(1, std::abs(land.col - from.col)),
                -1, path},
           path);
    }
  }
}

std::span<const std::uint32_t> MoveGraph::moves_from(int n) const {
  auto b = out_offsets_[static_cast<std::size_t>(n)];
  auto e = out_offsets_[static_cast<std::size_t>(n) + 1];
  return {out_index_.data() + b, e - b};
}

std::span<const std::uint32_t> MoveGraph::moves_into(int n) const {
  auto b = in_offsets_[static_cast<std::size_t>(n)];
  auto e = in_offsets_[static_cast<std::size_t>(n) + 1];
  return {in_index_.data() + b, e - b};
}

std::span<const Cell> MoveGraph::reach_cells(std::size_t i) const {
  auto b = reach_offsets_[i];
  auto e = reach_offsets_[i + 1];
  return {reach_pool_.data() + b, e - b};
}

namespace {

template <typename Neighbours>
std::vector<int> dijkstra(const MoveGraph& graph, const std::vector<int>& sources,
                          Neighbours&& neighbours) {
  std::vector<int> dist(static_cast<std::size_t>(graph.num_nodes()), kUnreachedCost);
  using Item = std::pair<int, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  for (int s : sources) {
    dist[static_cast<std::size_t>(s)] = 0;
    open.push({0, s});
  }
  while (!open.empty()) {
    auto [d, n] = open.top();
    open.pop();
    if (d != dist[static_cast<std::size_t>(n)]) continue;
    neighbours(n, [&](int next, int cost) {
      int nd = d + cost;
      int& cur = dist[static_cast<std::size_t>(next)];
      if (cur == kUnreachedCost || nd < cur) {
        cur = nd;
        open.push({nd, next});
      }
    });
  }
  return dist;
}

}  // namespace

std::vector<int> forward_costs(const MoveGraph& graph) {
  std::vector<int> sources;
  if (graph.start()) sources.push_back(*graph.start());
  return dijkstra(graph, sources, [&](int n, auto&& relax) {
    for (auto i : graph.moves_from(n)) {
      const Move& m = graph.move(i);
      relax(graph.node(m.to), m.cost);
    }
  });
}

std::vector<int> backward_costs(const MoveGraph& graph) {
  std::vector<int> sources;
  for (int r = 0; r < kLevelHeight; ++r) {
    int n = graph.node({graph.width() - 1, r});
    if (graph.is_goal(n)) sources.push_back(n);
  }
  return dijkstra(graph, sources, [&](int n, auto&& relax) {
    for (auto i : graph.moves_into(n)) {
      const Move& m = graph.move(i);
      relax(graph.node(m.from), m.cost);
    }
  });
}

int PathResult::jump_count() const {
  return static_cast<int>(std::count_if(moves.begin(), moves.end(), [](const Move& m) {
    return m.kind == MoveKind::Jump;
  }));
}

std::optional<PathResult> find_optimal_path(const MoveGraph& graph) {
  if (!graph.start()) return std::nullopt;
  const int goal_col = graph.width() - 1;
  auto heuristic = [&](int n) { return goal_col - n / kLevelHeight; };

  struct Record {
    int cost = -1;
    int jumps = 0;
    std::int64_t via = -1;  // move index
  };
  std::vector<Record> rec(static_cast<std::size_t>(graph.num_nodes()));

  // (f, jumps, -col, -row, seq): lowest first. Rightward, then downward,
  // then earlier insertion wins ties.
  using Key = std::tuple<int, int, int, int, std::uint64_t, int>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> open;
  std::uint64_t seq = 0;
  auto push = [&](int n) {
    const auto& r = rec[static_cast<std::size_t>(n)];
    Cell c = graph.cell(n);
    open.push({r.cost + heuristic(n), r.jumps, -c.col, -c.row, seq++, n});
  };

  const int start = *graph.start();
  rec[static_cast<std::size_t>(start)].cost = 0;
  push(start);
  std::vector<bool> closed(static_cast<std::size_t>(graph.num_nodes()), false);
  int goal = -1;
  while (!open.empty()) {
    auto [f, jumps, ncol, nrow, s, n] = open.top();
    open.pop();
    if (closed[static_cast<std::size_t>(n)]) continue;
    closed[static_cast<std::size_t>(n)] = true;
    if (graph.is_goal(n)) {
      goal = n;
      break;
    }
    const auto& cur = rec[static_cast<std::size_t>(n)];
    for (auto i : graph.moves_from(n)) {
      const Move& m = graph.move(i);
      const int next = graph.node(m.to);
      if (closed[static_cast<std::size_t>(next)]) continue;
      const int nc = cur.cost + m.cost;
      const int nj = cur.jumps + (m.kind == MoveKind::Jump ? 1 : 0);
      auto& r = rec[static_cast<std::size_t>(next)];
      if (r.cost < 0 || std::pair(nc, nj) < std::pair(r.cost, r.jumps)) {
        r = {nc, nj, static_cast<std::int64_t>(i)};
        push(next);
      }
    }
  }
  if (goal < 0) return std::nullopt;

  PathResult result;
  result.optimal_cost = rec[static_cast<std::size_t>(goal)].cost;
  for (int n = goal; rec[static_cast<std::size_t>(n)].via >= 0;) {
    const Move& m = graph.move(static_cast<std::size_t>(rec[static_cast<std::size_t>(n)].via));
    result.moves.push_back(m);
    n = graph.node(m.from);
  }
  std::reverse(result.moves.begin(), result.moves.end());
  result.states.push_back(graph.cell(start));
  for (const auto& m : result.moves) result.states.push_back(m.to);

  std::vector<bool> seen(static_cast<std::size_t>(graph.num_nodes()), false);
  auto visit = [&](Cell c) {
    auto s = seen[static_cast<std::size_t>(graph.node(c))];
    if (!s) {
      s = true;
      result.cells.push_back(c);
    }
  };
  visit(graph.cell(start));
  for (const auto& m : result.moves) {
    for (Cell c : m.trajectory) visit(c);
    visit(m.to);
  }
  return result;
}

std::optional<PathResult> find_optimal_path(const TileGrid& grid,
                                            const MovementModel& model) {
  return find_optimal_path(MoveGraph(grid, model));
}

std::vector<Cell> near_optimal_union(const TileGrid& grid,
                                     const MovementModel& model, int slack) {
  if (slack < 0) throw Error(ErrorCode::InvalidConfig, "slack must be non-negative");
  MoveGraph graph(grid, model);
  const auto g = forward_costs(graph);
  const auto h = backward_costs(graph);
  int best = -1;
  for (int n = 0; n < graph.num_nodes(); ++n) {
    if (graph.is_goal(n) && g[static_cast<std::size_t>(n)] >= 0) {
      int c = g[static_cast<std::size_t>(n)];
      if (best < 0 || c < best) best = c;
    }
  }
  if (best < 0) throw Error(ErrorCode::NotCompletable, "level is not completable");
  const int bound = best + slack;

  std::vector<bool> on(static_cast<std::size_t>(graph.num_nodes()), false);
  auto within = [&](int n) {
    return g[static_cast<std::size_t>(n)] >= 0 && h[static_cast<std::size_t>(n)] >= 0;
  };
  for (int n = 0; n < graph.num_nodes(); ++n) {
    if (within(n) && g[static_cast<std::size_t>(n)] + h[static_cast<std::size_t>(n)] <= bound) {
      on[static_cast<std::size_t>(n)] = true;
    }
  }
  for (std::size_t i = 0; i < graph.num_moves(); ++i) {
    const Move& m = graph.move(i);
    const int u = graph.node(m.from);
    const int v = graph.node(m.to);
    if (!within(u) || !within(v)) continue;
    if (g[static_cast<std::size_t>(u)] + m.cost + h[static_cast<std::size_t>(v)] <= bound) {
      for (Cell c : m.trajectory) on[static_cast<std::size_t>(graph.node(c))] = true;
    }
  }
  std::vector<Cell> cells;
  for (int col = 0; col < grid.width(); ++col) {
    for (int row = 0; row < kLevelHeight; ++row) {
      if (on[static_cast<std::size_t>(graph.node({col, row}))] &&
          is_empty_like(grid.at(col, row))) {
        cells.push_back({col, row});
      }
    }
  }
  return cells;
}

TileGrid annotate_paths(const TileGrid& grid, const MovementModel& model, int slack) {
  TileGrid out = grid;
  for (Cell c : near_optimal_union(grid, model, slack)) out.set(c, Tile::PathMarker);
  return out;
}

std::vector<Cell> reachable_empty(const MoveGraph& graph, const TileGrid& grid) {
  std::vector<Cell> cells;
  if (!graph.start()) return cells;
  std::vector<bool> visited(static_cast<std::size_t>(graph.num_nodes()), false);
  std::vector<bool> occupied(static_cast<std::size_t>(graph.num_nodes()), false);
  std::vector<int> stack{*graph.start()};
  visited[static_cast<std::size_t>(*graph.start())] = true;
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    occupied[static_cast<std::size_t>(n)] = true;
    for (auto i : graph.moves_from(n)) {
      for (Cell c : graph.reach_cells(i)) occupied[static_cast<std::size_t>(graph.node(c))] = true;
      int next = graph.node(graph.move(i).to);
      if (!visited[static_cast<std::size_t>(next)]) {
        visited[static_cast<std::size_t>(next)] = true;
        stack.push_back(next);
      }
    }
  }
  for (int col = 0; col < grid.width(); ++col) {
    for (int row = 0; row < kLevelHeight; ++row) {
      if (occupied[static_cast<std::size_t>(graph.node({col, row}))] &&
          is_empty_like(grid.at(col, row))) {
        cells.push_back({col, row});
      }
    }
  }
  return cells;
}

std::vector<Cell> reachable_empty(const TileGrid& grid, const MovementModel& model) {
  return reachable_empty(MoveGraph(grid, model), grid);
}

}  // namespace levelseq
