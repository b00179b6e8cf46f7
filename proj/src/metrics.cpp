#include "levelseq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/core.h>

#include "levelseq/error.hpp"

namespace levelseq {

double metric_value(const LevelMetrics& m, int index) {
  switch (index) {
    case 0: return m.e;
    case 1: return m.n;
    case 2: return m.d;
    case 3: return m.p;
    case 4: return m.l;
    case 5: return m.r2;
    case 6: return m.j;
    case 7: return m.j_i;
  }
  throw Error(ErrorCode::InvalidConfig, fmt::format("no metric {}", index));
}

std::vector<std::pair<int, int>> gap_runs(const TileGrid& grid) {
  std::vector<std::pair<int, int>> runs;
  const int bottom = kLevelHeight - 1;
  for (int c = 0; c < grid.width();) {
    if (grid.at(c, bottom) == Tile::Solid) {
      ++c;
      continue;
    }
    int end = c;
    while (end < grid.width() && grid.at(end, bottom) != Tile::Solid) ++end;
    runs.emplace_back(c, end - 1);
    c = end;
  }
  return runs;
}

double skyline_r2(const TileGrid& grid) {
  std::vector<double> xs, ys;
  for (int c = 0; c < grid.width(); ++c) {
    for (int r = 0; r < kLevelHeight; ++r) {
      if (!is_empty_like(grid.at(c, r))) {
        xs.push_back(c);
        ys.push_back(kLevelHeight - 1 - r);
        break;
      }
    }
  }
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 1.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (syy == 0.0 || sxx == 0.0) return 1.0;
  return std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
}

LevelMetrics evaluate_level(const TileGrid& grid, const MovementModel& model,
                            const MetricsOptions& options) {
  LevelMetrics m;
  const auto total = static_cast<double>(grid.size());
  std::size_t empty = 0, other = 0;
  for (Tile t : grid.cells()) {
    if (is_empty_like(t)) {
      ++empty;
    } else if (t != Tile::Solid) {
      ++other;
    }
  }
  m.e = static_cast<double>(empty) / total;
  m.d = static_cast<double>(other) / total;

  const MoveGraph graph(grid, model);
  const auto reach = reachable_empty(graph, grid);
  m.n = empty > 0 ? static_cast<double>(reach.size()) / static_cast<double>(empty) : 0.0;

  const auto gaps = gap_runs(grid);
  auto rewards = static_cast<int>(grid.count(Tile::QuestionPowerup));
  if (options.coin_blocks_are_rewards) rewards += static_cast<int>(grid.count(Tile::QuestionCoin));
  m.l = static_cast<int>(grid.count(Tile::Enemy)) + static_cast<int>(gaps.size()) - rewards;
  m.r2 = skyline_r2(grid);

  const auto path = find_optimal_path(graph);
  m.completable = path.has_value();
  if (!path) return m;
  m.p = static_cast<double>(path->cells.size()) / total;

  std::vector<bool> gap_col(static_cast<std::size_t>(grid.width()), false);
  for (auto [a, b] : gaps) {
    for (int c = a; c <= b; ++c) gap_col[static_cast<std::size_t>(c)] = true;
  }
  auto near_enemy = [&](Cell c) {
    for (int dc = -1; dc <= 1; ++dc) {
      for (int dr = -1; dr <= 1; ++dr) {
        if (grid.in_bounds(c.col + dc, c.row + dr) && grid.at(c.col + dc, c.row + dr) == Tile::Enemy) {
          return true;
        }
      }
    }
    return false;
  };
  for (const auto& mv : path->moves) {
    if (mv.kind != MoveKind::Jump) continue;
    ++m.j;
    const int lo = std::min(mv.from.col, mv.to.col);
    const int hi = std::max(mv.from.col, mv.to.col);
    bool meaningful = false;
    for (int c = lo; c <= hi && !meaningful; ++c) meaningful = gap_col[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < mv.trajectory.size() && !meaningful; ++k) {
      meaningful = near_enemy(mv.trajectory[k]);
    }
    if (meaningful) ++m.j_i;
  }
  return m;
}

std::vector<LevelMetrics> evaluate_levels(const std::vector<TileGrid>& grids, const MovementModel& model,
                                          const MetricsOptions& options, int jobs) {
  std::vector<LevelMetrics> out(grids.size());
  const auto n = static_cast<std::ptrdiff_t>(grids.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, jobs))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = evaluate_level(grids[static_cast<std::size_t>(i)], model, options);
  }
  return out;
}

int Histogram::bin_of(double v) const {
  const int bins = static_cast<int>(counts.size());
  if (hi <= lo) return 0;
  const int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
  return std::clamp(b, 0, bins - 1);
}

namespace {

MetricStats stats_of(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::sqrt(var)};
}

}  // namespace

BatchSummary summarize_batch(const std::vector<LevelMetrics>& metrics, int bins) {
  if (metrics.empty()) throw Error(ErrorCode::EmptyBatch, "cannot summarize an empty batch");
  if (bins < 1) throw Error(ErrorCode::InvalidConfig, "bins must be positive");
  BatchSummary s;
  s.count = static_cast<int>(metrics.size());
  s.bins = bins;

  std::vector<double> completable;
  for (const auto& m : metrics) completable.push_back(m.completable ? 1.0 : 0.0);
  const auto c = stats_of(completable);
  s.completable_fraction = c.mean;
  s.completable_std = c.std;

  std::vector<std::vector<double>> values(kNumMetrics);
  for (int k = 0; k < kNumMetrics; ++k) {
    for (const auto& m : metrics) values[static_cast<std::size_t>(k)].push_back(metric_value(m, k));
    const auto& v = values[static_cast<std::size_t>(k)];
    s.stats[static_cast<std::size_t>(k)] = stats_of(v);
    Histogram h{*std::min_element(v.begin(), v.end()), *std::max_element(v.begin(), v.end()),
                std::vector<int>(static_cast<std::size_t>(bins), 0)};
    for (double x : v) ++h.counts[static_cast<std::size_t>(h.bin_of(x))];
    s.histograms.push_back(std::move(h));
  }
  for (int x = 0; x < kNumMetrics; ++x) {
    for (int y = x + 1; y < kNumMetrics; ++y) {
      Histogram2D d{x, y, std::vector<int>(static_cast<std::size_t>(bins * bins), 0)};
      const auto& hx = s.histograms[static_cast<std::size_t>(x)];
      const auto& hy = s.histograms[static_cast<std::size_t>(y)];
      for (std::size_t i = 0; i < metrics.size(); ++i) {
        const int bx = hx.bin_of(values[static_cast<std::size_t>(x)][i]);
        const int by = hy.bin_of(values[static_cast<std::size_t>(y)][i]);
        ++d.counts[static_cast<std::size_t>(by * bins + bx)];
      }
      s.densities.push_back(std::move(d));
    }
  }
  return s;
}

std::array<bool, kNumMetrics> within_one_std(const BatchSummary& batch, const BatchSummary& reference) {
  std::array<bool, kNumMetrics> flags{};
  for (int k = 0; k < kNumMetrics; ++k) {
    const auto& ref = reference.stats[static_cast<std::size_t>(k)];
    if (!ref.std) {
      throw Error(ErrorCode::MissingStd,
                  fmt::format("reference has no standard deviation for {}", kMetricNames[static_cast<std::size_t>(k)]));
    }
    flags[static_cast<std::size_t>(k)] =
        std::abs(batch.stats[static_cast<std::size_t>(k)].mean - ref.mean) <= *ref.std;
  }
  return flags;
}

std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // no negative zero in output
  return fmt::format("{:.12g}", v);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, int lineno) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig,
                fmt::format("{}:{}: '{}' is not a number", path.string(), lineno, s));
  }
}

}  // namespace

BatchSummary read_summary_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  BatchSummary s;
  std::string line;
  int lineno = 0;
  std::array<bool, kNumMetrics> seen{};
  bool seen_c = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    auto f = split_csv(line);
    if (f[0] == "metric") continue;
    if (f.size() < 3) {
      throw Error(ErrorCode::InvalidConfig, fmt::format("{}:{}: expected metric,mean,std", path.string(), lineno));
    }
    const double mean = parse_double(f[1], path, lineno);
    std::optional<double> sd;
    if (!f[2].empty()) sd = parse_double(f[2], path, lineno);
    if (f.size() > 3 && s.source.empty()) s.source = f[3];
    if (f[0] == "C") {
      s.completable_fraction = mean;
      s.completable_std = sd;
      seen_c = true;
      continue;
    }
    auto it = std::find(kMetricNames.begin(), kMetricNames.end(), f[0]);
    if (it == kMetricNames.end()) {
      throw Error(ErrorCode::InvalidConfig, fmt::format("{}:{}: unknown metric '{}'", path.string(), lineno, f[0]));
    }
    const auto k = static_cast<std::size_t>(it - kMetricNames.begin());
    s.stats[k] = {mean, sd};
    seen[k] = true;
  }
  if (!seen_c || !std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw Error(ErrorCode::InvalidConfig, fmt::format("{}: summary is missing metrics", path.string()));
  }
  return s;
}

std::string summary_to_csv(const BatchSummary& s) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; };
  std::string out = "metric,mean,std,source\n";
  out += fmt::format("C,{},{},{}\n", format_number(s.completable_fraction), opt(s.completable_std), s.source);
  for (int k = 0; k < kNumMetrics; ++k) {
    const auto& st = s.stats[static_cast<std::size_t>(k)];
    out += fmt::format("{},{},{},{}\n", kMetricNames[static_cast<std::size_t>(k)], format_number(st.mean), opt(st.std),
                       s.source);
  }
  return out;
}

std::string metrics_to_csv(const std::vector<std::string>& names, const std::vector<LevelMetrics>& metrics) {
  std::string out = "level,completable,e,n,d,p,l,r2,j,j_i\n";
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const auto& m = metrics[i];
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", i < names.size() ? names[i] : std::to_string(i),
                       m.completable ? 1 : 0, format_number(m.e), format_number(m.n), format_number(m.d),
                       format_number(m.p), m.l, format_number(m.r2), m.j, m.j_i);
  }
  return out;
}

std::vector<LevelMetrics> read_metrics_csv(const std::filesystem::path& path, std::vector<std::string>* names) {
  std::istringstream in(read_text_file(path));
  std::vector<LevelMetrics> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.rfind("level,", 0) == 0) continue;
    auto f = split_csv(line);
    if (f.size() != 10) {
      throw Error(ErrorCode::InvalidConfig, fmt::format("{}:{}: expected 10 columns", path.string(), lineno));
    }
    LevelMetrics m;
    m.completable = parse_double(f[1], path, lineno) != 0.0;
    m.e = parse_double(f[2], path, lineno);
    m.n = parse_double(f[3], path, lineno);
    m.d = parse_double(f[4], path, lineno);
    m.p = parse_double(f[5], path, lineno);
    m.l = static_cast<int>(parse_double(f[6], path, lineno));
    m.r2 = parse_double(f[7], path, lineno);
    m.j = static_cast<int>(parse_double(f[8], path, lineno));
    m.j_i = static_cast<int>(parse_double(f[9], path, lineno));
    if (names) names->push_back(f[0]);
    out.push_back(m);
  }
  return out;
}

std::string render_comparison_table(const TableRow& reference, const std::vector<TableRow>& rows) {
  std::string out = "| Source | C | e | n | d | p | l | R2 | j | j_i |\n";
  out += "|---|---|---|---|---|---|---|---|---|---|\n";
  auto row = [&](const TableRow& r, const std::array<bool, kNumMetrics>* bold) {
    std::string line = fmt::format("| {} | {:.0f}% |", r.label, r.summary.completable_fraction * 100.0);
    for (int k = 0; k < kNumMetrics; ++k) {
      auto v = fmt::format("{:.2f}", r.summary.stats[static_cast<std::size_t>(k)].mean);
      if (bold && (*bold)[static_cast<std::size_t>(k)]) v = "**" + v + "**";
      line += " " + v + " |";
    }
    return line + "\n";
  };
  out += row(reference, nullptr);
  // Metrics without a reference std cannot be judged and stay plain.
  for (const auto& r : rows) {
    std::array<bool, kNumMetrics> flags{};
    for (std::size_t k = 0; k < flags.size(); ++k) {
      const auto& ref = reference.summary.stats[k];
      flags[k] = ref.std && std::abs(r.summary.stats[k].mean - ref.mean) <= *ref.std;
    }
    out += row(r, &flags);
  }
  return out;
}

}  // namespace levelseq
