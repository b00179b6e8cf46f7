#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "levelseq/level.hpp"

namespace levelseq {

struct ArcOffset {
  int dx = 0;
  int dy = 0;  // negative is upward

  friend constexpr bool operator==(ArcOffset, ArcOffset) = default;
};

// Jump landing offsets plus the limits derived from them. Walking (+-1, 0)
// is always available and is not part of the table.
class MovementModel {
 public:
  MovementModel();  // default table: span 5, rise 4
  explicit MovementModel(std::vector<ArcOffset> arcs);

  static MovementModel default_table(int max_span = 5, int max_rise = 4);
  static MovementModel from_text(std::string_view text);
  static MovementModel from_file(const std::filesystem::path& path);
  std::string to_text() const;

  const std::vector<ArcOffset>& arcs() const { return arcs_; }
  int max_span() const { return max_span_; }
  int max_jump_height() const { return max_jump_height_; }

 private:
  std::vector<ArcOffset> arcs_;
  int max_span_ = 0;
  int max_jump_height_ = 0;
};

enum class MoveKind : std::uint8_t { Walk, Jump, Fall };

// One edge of the move graph. Trajectory cells are the airborne cells
// strictly between takeoff and landing on the canonical (lowest) arc.
struct Move {
  MoveKind kind = MoveKind::Walk;
  Cell from;
  Cell to;
  int cost = 1;
  int arc_index = -1;  // index into MovementModel::arcs() for jumps
  std::vector<Cell> trajectory;
};

// Supported-cell move graph over one grid. An agent state is a passable cell
// directly above a solid cell.
class MoveGraph {
 public:
  MoveGraph(const TileGrid& grid, const MovementModel& model);

  int width() const { return width_; }
  int num_nodes() const { return width_ * kLevelHeight; }
  int node(Cell c) const { return c.col * kLevelHeight + c.row; }
  Cell cell(int node) const { return {node / kLevelHeight, node % kLevelHeight}; }

  bool is_state(int node) const { return state_[static_cast<std::size_t>(node)]; }
  bool is_goal(int node) const {
    return is_state(node) && node / kLevelHeight == width_ - 1;
  }
  std::optional<int> start() const { return start_; }

  std::size_t num_moves() const { return moves_.size(); }
  const Move& move(std::size_t i) const { return moves_[i]; }
  // Indices of moves leaving `node`.
  std::span<const std::uint32_t> moves_from(int node) const;
  std::span<const std::uint32_t> moves_into(int node) const;

  // Every cell an agent can occupy while making move i, over all feasible
  // arc heights. Superset of the canonical trajectory.
  std::span<const Cell> reach_cells(std::size_t i) const;

 private:
  void add_moves_from(const TileGrid& grid, const MovementModel& model, Cell c);

  int width_ = 0;
  std::vector<bool> state_;
  std::optional<int> start_;
  std::vector<Move> moves_;
  std::vector<std::uint32_t> out_offsets_, out_index_;
  std::vector<std::uint32_t> in_offsets_, in_index_;
  std::vector<std::uint32_t> reach_offsets_;
  std::vector<Cell> reach_pool_;
};

inline constexpr int kUnreachedCost = -1;

// Exact cost-from-start for every node (kUnreachedCost where unreachable).
std::vector<int> forward_costs(const MoveGraph& graph);
// Exact cost-to-any-goal for every node.
std::vector<int> backward_costs(const MoveGraph& graph);

struct PathResult {
  int optimal_cost = 0;
  std::vector<Cell> states;           // start, then each landing
  std::vector<Move> moves;            // states.size() - 1 moves
  std::vector<Cell> cells;            // every cell passed through, in order
  std::vector<Cell> near_optimal_cells;  // filled by near-optimal queries only

  int jump_count() const;
};

// A* with lexicographic (cost, jump count) and deterministic tie-breaking.
// nullopt means the goal column cannot be reached.
std::optional<PathResult> find_optimal_path(const MoveGraph& graph);
std::optional<PathResult> find_optimal_path(const TileGrid& grid,
                                            const MovementModel& model);

inline constexpr int kDefaultSlack = 10;

// Empty (or already marked) cells on some path of cost <= optimal + slack.
// Sorted. Throws NotCompletable.
std::vector<Cell> near_optimal_union(const TileGrid& grid,
                                     const MovementModel& model,
                                     int slack = kDefaultSlack);

TileGrid annotate_paths(const TileGrid& grid, const MovementModel& model,
                        int slack = kDefaultSlack);

// Empty cells the agent can occupy from the start state. Sorted.
std::vector<Cell> reachable_empty(const TileGrid& grid,
                                  const MovementModel& model);
std::vector<Cell> reachable_empty(const MoveGraph& graph, const TileGrid& grid);

}  // namespace levelseq
