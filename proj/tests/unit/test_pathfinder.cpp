#include <doctest.h>

#include <algorithm>
#include <set>

#include "levelseq/error.hpp"
#include "levelseq/pathfinder.hpp"
#include "pathfinder_oracle.hpp"
#include "test_support.hpp"

using namespace levelseq;

namespace {

const std::vector<std::string> kCompletable = {
    "flat_gap.txt", "corridor.txt", "low_ceiling.txt", "pipe.txt",   "pipes.txt",
    "stairs.txt",   "gaps.txt",     "platforms.txt",   "island.txt", "underground.txt",
    "bullets.txt",  "drop.txt",     "climb.txt",       "enemies.txt", "step_wall.txt",
    "rewards.txt",  "tiny_level.txt"};
const std::vector<std::string> kUncompletable = {"blocked_end.txt", "wide_pit.txt", "high_wall.txt"};

std::vector<std::string> all_fixtures() {
  auto v = kCompletable;
  v.insert(v.end(), kUncompletable.begin(), kUncompletable.end());
  return v;
}

std::set<Cell> as_set(const std::vector<Cell>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("arc table text format") {
  MovementModel def;
  CHECK(def.arcs().size() == 10u * 9u);
  CHECK(def.max_span() == 5);
  CHECK(def.max_jump_height() == 4);
  auto again = MovementModel::from_text(def.to_text());
  CHECK(again.arcs() == def.arcs());
  auto small = MovementModel::from_text("# hop\n1 -1\n-1 -1  # back\n");
  CHECK(small.arcs().size() == 2u);
  CHECK(small.max_jump_height() == 1);
  CHECK_THROWS_AS(MovementModel::from_text("0 -1\n"), Error);
  CHECK_THROWS_AS(MovementModel::from_text("1\n"), Error);
  CHECK_THROWS_AS(MovementModel::from_text("# nothing\n"), Error);
}

TEST_CASE("flat corridor: walk along row 14 at cost 9") {
  auto g = testing::fixture("corridor.txt");
  CHECK(g == testing::corridor(10));
  auto path = find_optimal_path(g, MovementModel{});
  REQUIRE(path.has_value());
  CHECK(path->optimal_cost == 9);
  CHECK(path->jump_count() == 0);
  REQUIRE(path->cells.size() == 10u);
  for (int c = 0; c < 10; ++c) CHECK(path->cells[static_cast<std::size_t>(c)] == Cell{c, 14});
}

TEST_CASE("flat_gap: exactly one jump, over columns 5-6") {
  auto g = testing::fixture("flat_gap.txt");
  auto path = find_optimal_path(g, MovementModel{});
  REQUIRE(path.has_value());
  CHECK(path->jump_count() == 1);
  for (const auto& m : path->moves) {
    if (m.kind != MoveKind::Jump) continue;
    CHECK(m.from.col <= 4);
    CHECK(m.to.col >= 7);
  }
  auto G = oracle::build(g, MovementModel{});
  CHECK(path->optimal_cost == *oracle::optimal_cost(G));
}

TEST_CASE("uncompletable fixtures") {
  for (const auto& name : kUncompletable) {
    CAPTURE(name);
    auto g = testing::fixture(name);
    CHECK_FALSE(find_optimal_path(g, MovementModel{}).has_value());
    CHECK_THROWS_AS(near_optimal_union(g, MovementModel{}), Error);
    try {
      annotate_paths(g, MovementModel{});
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotCompletable);
    }
  }
  // no goal cells at all
  auto blocked = testing::fixture("blocked_end.txt");
  MoveGraph graph(blocked, MovementModel{});
  for (int r = 0; r < 16; ++r) CHECK_FALSE(graph.is_goal(graph.node({9, r})));
}

TEST_CASE("A* cost equals the fixpoint oracle on every fixture") {
  const auto fixtures = all_fixtures();
  CHECK(fixtures.size() >= 15);
  MovementModel model;
  for (const auto& name : fixtures) {
    CAPTURE(name);
    auto g = testing::fixture(name);
    REQUIRE(g.width() <= 40);
    auto G = oracle::build(g, model);
    auto expected = oracle::optimal_cost_and_jumps(G);
    auto path = find_optimal_path(g, model);
    REQUIRE(path.has_value() == expected.has_value());
    if (!path) continue;
    CHECK(path->optimal_cost == expected->first);
    CHECK(path->jump_count() == expected->second);

    // The returned path is a chain of oracle edges with the claimed cost.
    int total = 0;
    Cell at = *G.start;
    for (const auto& m : path->moves) {
      CHECK(m.from == at);
      auto it = std::find_if(G.edges.begin(), G.edges.end(), [&](const oracle::Edge& e) {
        return e.from == m.from && e.to == m.to && e.jump == (m.kind == MoveKind::Jump) &&
               e.path == m.trajectory;
      });
      REQUIRE(it != G.edges.end());
      total += it->cost;
      at = m.to;
    }
    CHECK(total == path->optimal_cost);
    CHECK(at.col == g.width() - 1);
  }
}

TEST_CASE("sweep costs equal the oracle's on every node") {
  MovementModel model;
  for (const auto& name : all_fixtures()) {
    CAPTURE(name);
    auto g = testing::fixture(name);
    MoveGraph graph(g, model);
    auto G = oracle::build(g, model);
    auto fg = forward_costs(graph);
    auto bh = backward_costs(graph);
    auto og = oracle::costs_from_start(G);
    auto oh = oracle::costs_to_goal(G);
    for (int n = 0; n < graph.num_nodes(); ++n) {
      const Cell c = graph.cell(n);
      CHECK(graph.is_state(n) == oracle::standable(g, c));
      auto gi = og.find(c);
      CHECK(fg[static_cast<std::size_t>(n)] == (gi == og.end() ? kUnreachedCost : gi->second));
      auto hi = oh.find(c);
      CHECK(bh[static_cast<std::size_t>(n)] == (hi == oh.end() ? kUnreachedCost : hi->second));
    }
  }
}

TEST_CASE("near-optimal union equals exhaustive path enumeration") {
  MovementModel model;
  for (const auto& name : kCompletable) {
    CAPTURE(name);
    auto g = testing::fixture(name);
    auto G = oracle::build(g, model);
    const int opt = *oracle::optimal_cost(G);
    for (int slack : {0, 3, 10}) {
      CAPTURE(slack);
      auto expected = oracle::only_air(g, oracle::paths_within(G, opt + slack));
      CHECK(as_set(near_optimal_union(g, model, slack)) == expected);
    }
  }
}

TEST_CASE("near-optimal union is monotone in slack and contains the optimal path") {
  MovementModel model;
  for (const auto& name : kCompletable) {
    CAPTURE(name);
    auto g = testing::fixture(name);
    auto path = find_optimal_path(g, model);
    REQUIRE(path.has_value());
    std::set<Cell> prev;
    for (int slack = 0; slack <= 12; slack += 2) {
      auto cur = as_set(near_optimal_union(g, model, slack));
      CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      prev = cur;
    }
    auto zero = as_set(near_optimal_union(g, model, 0));
    for (Cell c : path->cells) {
      if (is_empty_like(g.at(c))) CHECK(zero.count(c) == 1);
    }
  }
}

TEST_CASE("slack 0 on a unique optimal path gives exactly that path") {
  // Tight tunnel: one row of air above the floor, so no jumps fit.
  auto g = testing::fixture("low_ceiling.txt");
  auto path = find_optimal_path(g, MovementModel{});
  REQUIRE(path.has_value());
  auto zero = near_optimal_union(g, MovementModel{}, 0);
  CHECK(as_set(zero) == as_set(path->cells));
  CHECK(zero.size() == 8u);
}

TEST_CASE("annotation marks the corridor floor, is idempotent and keeps solid tiles") {
  MovementModel model;
  auto g = testing::fixture("corridor.txt");
  auto a = annotate_paths(g, model);
  for (int c = 0; c < 10; ++c) CHECK(a.at(c, 14) == Tile::PathMarker);
  for (const auto& name : kCompletable) {
    CAPTURE(name);
    auto f = testing::fixture(name);
    auto once = annotate_paths(f, model);
    CHECK(annotate_paths(once, model) == once);
    for (int c = 0; c < f.width(); ++c) {
      for (int r = 0; r < 16; ++r) {
        if (f.at(c, r) != Tile::Empty) CHECK(once.at(c, r) == f.at(c, r));
        if (once.at(c, r) == Tile::PathMarker) CHECK(f.at(c, r) == Tile::Empty);
      }
    }
  }
}

TEST_CASE("reachable empty cells equal the oracle closure") {
  MovementModel model;
  for (const auto& name : all_fixtures()) {
    CAPTURE(name);
    auto g = testing::fixture(name);
    auto G = oracle::build(g, model);
    auto cl = oracle::closure(G);
    CHECK(as_set(reachable_empty(g, model)) == oracle::only_air(g, cl.cells));
    bool goal_reached = std::any_of(cl.states.begin(), cl.states.end(),
                                    [&](Cell c) { return c.col == g.width() - 1; });
    CHECK(find_optimal_path(g, model).has_value() == goal_reached);
    // markers are transparent
    if (find_optimal_path(g, model)) {
      CHECK(reachable_empty(annotate_paths(g, model), model) == reachable_empty(g, model));
    }
  }
}

TEST_CASE("corridor reachability is the band within jump height of the floor") {
  auto g = testing::fixture("corridor.txt");
  auto cells = as_set(reachable_empty(g, MovementModel{}));
  std::set<Cell> band;
  for (int c = 0; c < 10; ++c) {
    for (int r = 10; r <= 14; ++r) band.insert({c, r});
  }
  CHECK(cells == band);
}

TEST_CASE("a sealed hole is not reachable") {
  TileGrid g(6, Tile::Solid);
  g.set(3, 7, Tile::Empty);
  CHECK(reachable_empty(g, MovementModel{}).empty());
  CHECK_FALSE(find_optimal_path(g, MovementModel{}).has_value());
}

TEST_CASE("shipped corpus levels are completable") {
  MovementModel model;
  for (const auto& f : list_level_files(testing::data_dir() / "corpus")) {
    CAPTURE(f.string());
    CHECK(find_optimal_path(load_level_file(f), model).has_value());
  }
}
