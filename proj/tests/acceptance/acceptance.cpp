// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Criteria 7-9 and part of 10 drive the real CLI.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "levelseq/codec.hpp"
#include "levelseq/error.hpp"
#include "levelseq/generator.hpp"
#include "levelseq/lstm.hpp"
#include "levelseq/metrics.hpp"
#include "levelseq/pathfinder.hpp"
#include "levelseq/trainer.hpp"
#include "lstm_reference.hpp"
#include "pathfinder_oracle.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace levelseq;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

struct Env {
  fs::path work;
  std::string cli;
  fs::path report_dir;
  bool reuse_report = false;
};

// Runs the CLI with stdout and stderr captured to work/logs/<tag>.log.
int run_cli(const Env& env, const std::string& tag, const std::vector<std::string>& args) {
  fs::create_directories(env.work / "logs");
  std::string cmd = quote(env.cli);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " > " + quote((env.work / "logs" / (tag + ".log")).string()) + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void require_cli(const Env& env, const std::string& tag, const std::vector<std::string>& args) {
  const int rc = run_cli(env, tag, args);
  if (rc != 0) throw std::runtime_error(fmt::format("'{}' exited with {} (see logs/{}.log)", args.front(), rc, tag));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------- 1

TileGrid random_grid(Rng& rng, int width, bool markers) {
  TileGrid g(width);
  const auto n = static_cast<std::uint64_t>(markers ? kAllTiles : kGroundTruthTiles);
  for (int c = 0; c < width; ++c) {
    for (int r = 0; r < kLevelHeight; ++r) g.set(c, r, static_cast<Tile>(rng.below(n)));
  }
  if (markers && !g.contains(Tile::PathMarker)) g.set(0, 0, Tile::PathMarker);
  return g;
}

Outcome codec_round_trip() {
  const auto t0 = Clock::now();
  Rng rng(31337);
  int pairs = 0;
  int bad = 0;
  for (int i = 0; i < 200; ++i) {
    const int width = 1 + static_cast<int>(rng.below(60));
    for (auto spec : EncodingSpec::all()) {
      const auto g = random_grid(rng, width, spec.paths);
      for (const auto& seq : encode(g, spec)) {
        const auto back = decode(seq);
        if (!(back.grid == g) || !back.warnings.empty()) ++bad;
      }
      ++pairs;
    }
  }
  const double s = seconds_since(t0);
  return {bad == 0 && pairs == 1600 && s < 10.0,
          fmt::format("{} grid/spec pairs, {} mismatches, {:.2f} s (limit 10 s)", pairs, bad, s)};
}

// ---------------------------------------------------------------- 2

Outcome gradient_check() {
  const auto t0 = Clock::now();
  Rng rng(4242);
  constexpr double eps = 1e-4;
  int models = 0;
  int checked = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> hidden = trial % 2 ? std::vector<int>{8, 8} : std::vector<int>{8};
    auto m = LstmModel::initialized(6, hidden, 0.0, 900 + static_cast<std::uint64_t>(trial), 0.5, 0.3);
    std::vector<int> w(13);  // 12 predictions
    for (int& t : w) t = static_cast<int>(rng.below(6));
    std::vector<double> grads(m.num_params());
    auto state = LstmState::zeros(m);
    loss_and_grads(m, w, state, nullptr, grads, 0.0);
    for (int s = 0; s < 40; ++s) {
      const auto k = static_cast<std::size_t>(rng.below(m.num_params()));
      auto plus = m, minus = m;
      plus.params()[k] += eps;
      minus.params()[k] -= eps;
      const double numeric = (oracle::reference_loss(plus, w) - oracle::reference_loss(minus, w)) / (2 * eps);
      const double err = std::abs(grads[k] - numeric) / std::max({std::abs(grads[k]), std::abs(numeric), 1e-8});
      worst = std::max(worst, err);
      ++checked;
    }
    ++models;
  }
  const double s = seconds_since(t0);
  return {models >= 20 && worst <= 1e-4 && s < 60.0,
          fmt::format("{} models, {} parameters, worst relative error {:.2e}, {:.1f} s", models, checked, worst, s)};
}

// ---------------------------------------------------------------- 3

Outcome untrained_nll() {
  auto d = make_dataset(testing::data_dir() / "corpus", EncodingSpec{}, MovementModel{});
  const auto cfg = TrainConfig::desk();
  auto m = LstmModel::initialized(16, cfg.hidden, 0.0, cfg.seed, cfg.init_range);
  const double nll = evaluate_nll(m, d.eval);
  const double target = std::log(16.0);
  const double rel = std::abs(nll - target) / target;
  return {rel <= 0.05, fmt::format("NLL {:.4f} vs ln16 {:.4f}, off by {:.2f}%", nll, target, 100 * rel)};
}

// ---------------------------------------------------------------- 4

Outcome memorization(const Env& env) {
  const auto t0 = Clock::now();
  const EncodingSpec spec{};
  Dataset d;
  d.spec = spec;
  d.train = encode(testing::fixture("tiny_level.txt"), spec);
  d.eval = d.train;
  d.train_levels = d.eval_levels = {"tiny_level"};
  TrainConfig c;
  c.spec = spec;
  c.hidden = {32, 32};
  c.dropout = 0.0;
  c.bptt_len = 200;
  c.eval_every = 1000000;
  c.max_epochs = 2000;
  c.plateau_epochs = 300;
  c.optimizer.learning_rate = 1e-2;
  c.optimizer.lr_decay = 1.0;
  c.seed = 7;
  auto r = train(c, d, env.work / "memorize");
  Rng rng(1);
  std::vector<int> seed{Vocabulary::level_start()};
  auto gen = generate_level(r.best_model, spec, seed, 1e-9, rng, default_max_tokens(spec));
  const bool exact = gen.status == GeneratedLevel::Status::Ok && gen.sequence.tokens == d.train[0].tokens;
  const double s = seconds_since(t0);
  return {r.best_eval_nll < 0.05 && exact && s < 300.0,
          fmt::format("{}x{} model, NLL {:.4f} at epoch {}, greedy sample {}, {:.0f} s (limit 300 s)",
                      c.hidden.size(), c.hidden[0], r.best_eval_nll, r.best_epoch,
                      exact ? "reproduces the level" : "differs", s)};
}

// ---------------------------------------------------------------- 5

const std::vector<std::string> kCompletable = {
    "flat_gap.txt", "corridor.txt", "low_ceiling.txt", "pipe.txt",    "pipes.txt",     "stairs.txt",
    "gaps.txt",     "platforms.txt", "island.txt",     "underground.txt", "bullets.txt", "drop.txt",
    "climb.txt",    "enemies.txt",  "step_wall.txt",   "rewards.txt", "tiny_level.txt"};
const std::vector<std::string> kUncompletable = {"blocked_end.txt", "wide_pit.txt", "high_wall.txt"};

// Every cell on a path of cost <= bound, from cost-to-come plus cost-to-go.
std::set<Cell> union_by_costs(const oracle::Graph& G, int bound) {
  const auto g = oracle::costs_from_start(G);
  const auto h = oracle::costs_to_goal(G);
  std::set<Cell> cells;
  for (const auto& e : G.edges) {
    auto gi = g.find(e.from);
    auto hi = h.find(e.to);
    if (gi == g.end() || hi == h.end() || gi->second + e.cost + hi->second > bound) continue;
    cells.insert(e.from);
    cells.insert(e.to);
    cells.insert(e.path.begin(), e.path.end());
  }
  for (auto [c, v] : g) {
    if (G.goal(c) && v <= bound) cells.insert(c);
  }
  return cells;
}

Outcome pathfinding() {
  const MovementModel model;
  int fixtures = 0;
  int cost_ok = 0;
  int nested = 0;
  int characterized = 0;
  int completable = 0;
  for (const auto* list : {&kCompletable, &kUncompletable}) {
    for (const auto& name : *list) {
      const auto g = testing::fixture(name);
      if (g.width() > 40) continue;
      ++fixtures;
      const auto G = oracle::build(g, model);
      const auto expected = oracle::optimal_cost(G);
      const auto path = find_optimal_path(g, model);
      if (path.has_value() == expected.has_value() && (!path || path->optimal_cost == *expected)) ++cost_ok;
      if (!expected) continue;
      ++completable;
      const auto u0 = near_optimal_union(g, model, 0);
      const auto u10 = near_optimal_union(g, model, 10);
      const std::set<Cell> s0(u0.begin(), u0.end());
      const std::set<Cell> s10(u10.begin(), u10.end());
      if (std::includes(s10.begin(), s10.end(), s0.begin(), s0.end())) ++nested;
      const auto brute = oracle::only_air(g, oracle::paths_within(G, *expected + 10));
      const auto by_costs = oracle::only_air(g, union_by_costs(G, *expected + 10));
      if (s10 == brute && brute == by_costs) ++characterized;
    }
  }
  return {fixtures >= 15 && cost_ok == fixtures && nested == completable && characterized == completable,
          fmt::format("{} fixtures, costs agree on {}, slack nesting on {}/{}, slack-10 union matches "
                      "enumeration on {}/{}",
                      fixtures, cost_ok, nested, completable, characterized, completable)};
}

// ---------------------------------------------------------------- 6

bool near(double a, double b) { return std::abs(a - b) < 1e-9; }

Outcome metrics_fixtures() {
  const MovementModel model;
  std::vector<std::pair<std::string, bool>> checks;
  auto check = [&](const std::string& name, const LevelMetrics& m, bool completable, double e, double n, double d,
                   double p, double l, double r2, double j, double j_i) {
    bool ok = m.completable == completable && near(m.e, e) && (n < 0 || near(m.n, n)) && near(m.d, d) &&
              near(m.p, p) && near(m.l, l) && near(m.r2, r2) && near(m.j, j) && near(m.j_i, j_i);
    checks.emplace_back(name, ok);
  };
  auto fx = [&](const std::string& name) { return evaluate_level(testing::fixture(name), model); };

  // n < 0 skips the reachable share where it was not counted by hand
  check("corridor", fx("corridor.txt"), true, 15.0 / 16.0, 50.0 / 150.0, 0, 10.0 / 160.0, 0, 1.0, 0, 0);
  check("flat_gap", fx("flat_gap.txt"), true, 171.0 / 192.0, -1, 1.0 / 192.0, 12.0 / 192.0, 2,
        0.09551656920077972, 1, 1);
  const auto rw = fx("rewards.txt");
  check("rewards", rw, true, 164.0 / 192.0, -1, 4.0 / 192.0, 12.0 / 192.0, -2, 0.020156314273961334, 0, rw.j_i);
  MetricsOptions coins;
  coins.coin_blocks_are_rewards = true;
  checks.emplace_back("rewards with coins",
                      evaluate_level(testing::fixture("rewards.txt"), model, coins).l == -3);
  checks.emplace_back("enemies", fx("enemies.txt").l == 4);
  const auto gaps = fx("gaps.txt");
  checks.emplace_back("gaps", gaps.l == 4 && gaps.j == 4 && gaps.j_i == 4);
  check("all solid", evaluate_level(TileGrid(7, Tile::Solid), model), false, 0, 0, 0, 0, 0, 1.0, 0, 0);
  check("all empty", evaluate_level(TileGrid(7), model), false, 1.0, 0, 0, 0, 1, 1.0, 0, 0);

  std::string failed;
  int passed = 0;
  for (const auto& [name, ok] : checks) {
    if (ok) ++passed;
    else failed += " " + name;
  }
  return {passed == static_cast<int>(checks.size()),
          fmt::format("{}/{} hand-computed cases agree{}", passed, checks.size(),
                      failed.empty() ? "" : ", failed:" + failed)};
}

// ---------------------------------------------------------------- 7-9

struct ReportRun {
  std::optional<nlohmann::json> report;
  double seconds = -1;
  std::string error;
};

ReportRun run_report(const Env& env) {
  ReportRun r;
  const auto timing = env.report_dir / "acceptance_seconds.txt";
  try {
    if (!env.reuse_report) {
      fs::remove_all(env.report_dir);
      const auto t0 = Clock::now();
      require_cli(env, "report", {"report", "--profile", "desk", "--corpus", (testing::data_dir() / "corpus").string(),
                                  "--out", env.report_dir.string()});
      r.seconds = seconds_since(t0);
      std::ofstream(timing) << fmt::format("{:.1f}\n", r.seconds);
    } else if (fs::exists(timing)) {
      r.seconds = std::stod(slurp(timing));
    }
    r.report = nlohmann::json::parse(slurp(env.report_dir / "report.json"));
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

const nlohmann::json* find_spec(const nlohmann::json& report, const std::string& label) {
  for (const auto& s : report.at("specs")) {
    if (s.at("label") == label) return &s;
  }
  return nullptr;
}

std::string paths_off(std::string label) {
  label[1] = 'N';
  return label;
}

Outcome nll_paths_vs_plain(const ReportRun& run) {
  if (!run.report) return {false, "report failed: " + run.error};
  int pairs = 0;
  int ok = 0;
  std::string detail;
  for (const auto& s : run.report->at("specs")) {
    const auto label = s.at("label").get<std::string>();
    if (label[1] != 'Y') continue;
    const auto* off = find_spec(*run.report, paths_off(label));
    if (!off) continue;
    ++pairs;
    const double a = s.at("eval_nll").get<double>();
    const double b = off->at("eval_nll").get<double>();
    if (a <= b) ++ok;
    detail += fmt::format(" {} {:.4f}/{} {:.4f}", label, a, paths_off(label), b);
  }
  const bool timed = run.seconds >= 0;
  return {pairs == 4 && ok == pairs && timed && run.seconds < 1800.0,
          fmt::format("{}/{} paths-on specs at or below their counterpart;{}; whole report {} (limit 1800 s)",
                      ok, pairs, detail, timed ? fmt::format("{:.0f} s", run.seconds) : "untimed")};
}

Outcome clean_samples(const ReportRun& run) {
  if (!run.report) return {false, "report failed: " + run.error};
  const auto best = run.report->at("best").get<std::string>();
  const auto* s = find_spec(*run.report, best);
  const double frac = s->at("zero_warning_fraction").get<double>();
  return {frac >= 0.9, fmt::format("best spec {}: {:.0f}% of {} samples without column warnings (need 90%)", best,
                                   100 * frac, s->at("samples").get<int>())};
}

Outcome completability(const ReportRun& run) {
  if (!run.report) return {false, "report failed: " + run.error};
  const nlohmann::json* best = nullptr;
  for (const auto& s : run.report->at("specs")) {
    if (s.at("label").get<std::string>()[1] != 'Y') continue;
    if (!best || s.at("eval_nll").get<double>() < best->at("eval_nll").get<double>()) best = &s;
  }
  if (!best) return {false, "no paths-on spec in the report"};
  const auto label = best->at("label").get<std::string>();
  const auto* off = find_spec(*run.report, paths_off(label));
  if (!off) return {false, "missing counterpart " + paths_off(label)};
  const double a = best->at("completable_fraction").get<double>();
  const double b = off->at("completable_fraction").get<double>();
  return {a >= b, fmt::format("best paths-on spec {} C = {:.2f}, {} C = {:.2f}", label, a, paths_off(label), b)};
}

// ---------------------------------------------------------------- 10

// Files under `a` (manifest.json excluded) and under `b` must match by
// relative path and content.
std::vector<std::string> tree_differences(const fs::path& a, const fs::path& b) {
  auto files = [](const fs::path& root) {
    std::map<std::string, fs::path> out;
    if (!fs::exists(root)) return out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file() && e.path().filename() != "manifest.json") {
        out[fs::relative(e.path(), root).string()] = e.path();
      }
    }
    return out;
  };
  const auto fa = files(a);
  const auto fb = files(b);
  std::vector<std::string> diffs;
  if (fa.empty()) diffs.push_back(a.string() + " is empty");
  for (const auto& [rel, p] : fa) {
    auto it = fb.find(rel);
    if (it == fb.end()) diffs.push_back(rel + " missing");
    else if (slurp(p) != slurp(it->second)) diffs.push_back(rel + " differs");
  }
  for (const auto& [rel, p] : fb) {
    if (!fa.count(rel)) diffs.push_back(rel + " extra");
  }
  return diffs;
}

Outcome replay(const Env& env, const ReportRun& run) {
  const auto orig = env.work / "c10" / "orig";
  const auto again = env.work / "c10" / "replay";
  fs::remove_all(env.work / "c10");
  const auto corpus = (testing::data_dir() / "corpus").string();
  const auto o = [&](const std::string& rel) { return (orig / rel).string(); };

  try {
    require_cli(env, "c10_dump", {"dump-arcs", "--out", o("arcs/arcs.txt")});
    require_cli(env, "c10_ingest", {"ingest", "--corpus", corpus, "--out", o("ingest")});
    require_cli(env, "c10_annotate", {"annotate", "--corpus", corpus, "--out", o("annotate")});
    require_cli(env, "c10_encode",
                {"encode", "--corpus", corpus, "--snaking", "Y", "--paths", "Y", "--depth", "Y", "--out", o("encode")});
    require_cli(env, "c10_train",
                {"train", "--corpus", corpus, "--paths", "Y", "--hidden", "16", "--layers", "1", "--max-epochs", "2",
                 "--bptt", "50", "--seed", "5", "--out", o("train")});
    require_cli(env, "c10_sample",
                {"sample", "--ckpt", o("train/best.ckpt"), "--count", "12", "--master-seed", "9", "--out", o("samples")});
    require_cli(env, "c10_evaluate", {"evaluate", "--levels", o("samples"), "--out", o("eval/metrics.csv")});
    require_cli(env, "c10_corpus", {"evaluate", "--levels", corpus, "--out", o("corpus/metrics.csv")});
    require_cli(env, "c10_plot", {"plot", "--metrics", o("eval/metrics.csv"), "--reference", o("corpus/metrics.csv"),
                                  "--out", o("plot/corner.svg")});
  } catch (const std::exception& e) {
    return {false, e.what()};
  }

  struct Case {
    fs::path manifest_dir;
    fs::path replay_dir;
    std::string out_arg;  // replacement for the recorded --out
  };
  std::vector<Case> cases;
  for (const auto* step : {"ingest", "annotate", "encode", "train", "samples"}) {
    cases.push_back({orig / step, again / step, (again / step).string()});
  }
  cases.push_back({orig / "arcs", again / "arcs", (again / "arcs" / "arcs.txt").string()});
  cases.push_back({orig / "eval", again / "eval", (again / "eval" / "metrics.csv").string()});
  cases.push_back({orig / "plot", again / "plot", (again / "plot" / "corner.svg").string()});
  if (run.report) {
    const auto best = run.report->at("best").get<std::string>();
    const auto rep = again / "report";
    cases.push_back({env.report_dir / best / "samples", rep / "samples", (rep / "samples").string()});
    cases.push_back({env.report_dir / "plot", rep / "plot", (rep / "plot" / "corner.svg").string()});
  }

  int identical = 0;
  std::string failed;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    const int rc = run_cli(env, fmt::format("c10_replay_{}", i),
                           {"replay", "--manifest", (c.manifest_dir / "manifest.json").string(), "--out", c.out_arg});
    auto diffs = rc == 0 ? tree_differences(c.manifest_dir, c.replay_dir)
                         : std::vector<std::string>{fmt::format("exit {}", rc)};
    if (diffs.empty()) ++identical;
    else failed += fmt::format(" {}: {}", c.manifest_dir.filename().string(), diffs.front());
  }
  return {identical == static_cast<int>(cases.size()) && run.report.has_value(),
          fmt::format("{}/{} manifests replay byte-identical{}{}", identical, cases.size(),
                      run.report ? "" : " (report outputs unavailable)", failed.empty() ? "" : ";" + failed)};
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  Env env;
  std::string work;
  std::string report;
  std::vector<int> only;
  env.cli = LEVELSEQ_CLI_PATH;
  app.add_option("--work-dir", work, "Scratch directory")->required();
  app.add_option("--cli", env.cli, "levelseq executable");
  app.add_option("--reuse-report", report, "Existing report directory to check instead of running one");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  env.work = fs::absolute(work);
  fs::create_directories(env.work);
  env.reuse_report = !report.empty();
  env.report_dir = env.reuse_report ? fs::absolute(report) : env.work / "report";

  auto wanted = [&](int k) { return only.empty() || std::find(only.begin(), only.end(), k) != only.end(); };
  int failures = 0;
  auto emit = [&](int k, const std::string& name, const Outcome& r) {
    fmt::print("{} {:>2} {}: {}\n", r.pass ? "PASS" : "FAIL", k, name, r.detail);
    std::fflush(stdout);
    if (!r.pass) ++failures;
  };

  if (wanted(1)) emit(1, "codec round trip", guarded(codec_round_trip));
  if (wanted(2)) emit(2, "gradient check", guarded(gradient_check));
  if (wanted(3)) emit(3, "untrained NLL", guarded(untrained_nll));
  if (wanted(4)) emit(4, "memorization", guarded([&] { return memorization(env); }));
  if (wanted(5)) emit(5, "pathfinding", guarded(pathfinding));
  if (wanted(6)) emit(6, "metrics", guarded(metrics_fixtures));

  ReportRun run;
  if (wanted(7) || wanted(8) || wanted(9) || wanted(10)) run = run_report(env);
  if (wanted(7)) emit(7, "paths lower NLL", guarded([&] { return nll_paths_vs_plain(run); }));
  if (wanted(8)) emit(8, "clean columns", guarded([&] { return clean_samples(run); }));
  if (wanted(9)) emit(9, "paths keep completability", guarded([&] { return completability(run); }));
  if (wanted(10)) emit(10, "replay", guarded([&] { return replay(env, run); }));

  return failures == 0 ? 0 : 1;
}
