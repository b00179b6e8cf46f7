#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "levelseq/level.hpp"
#include "levelseq/pathfinder.hpp"

namespace levelseq {

// Per-level expressive-range statistics. PathMarker counts as Empty.
struct LevelMetrics {
  bool completable = false;
  double e = 0.0;   // empty fraction
  double n = 0.0;   // reachable share of empty cells
  double d = 0.0;   // neither Solid nor Empty
  double p = 0.0;   // optimal-path cells / total
  int l = 0;        // enemies + gaps - power-up blocks
  double r2 = 1.0;  // linearity of the skyline
  int j = 0;        // jumps on the optimal path
  int j_i = 0;      // jumps over a gap or near an enemy
};

// Order of the numeric metrics in tables, CSV columns and plots.
inline constexpr std::array<std::string_view, 8> kMetricNames = {"e", "n", "d", "p", "l", "r2", "j", "j_i"};
inline constexpr int kNumMetrics = 8;

double metric_value(const LevelMetrics& m, int index);

struct MetricsOptions {
  bool coin_blocks_are_rewards = false;
};

// Maximal runs of columns whose bottom row holds no Solid tile.
std::vector<std::pair<int, int>> gap_runs(const TileGrid& grid);

// Least-squares R^2 of the topmost non-empty cell height per column,
// ignoring fully empty columns; 1.0 for flat or degenerate skylines.
double skyline_r2(const TileGrid& grid);

LevelMetrics evaluate_level(const TileGrid& grid, const MovementModel& model,
                            const MetricsOptions& options = {});

// Evaluates in parallel; output order matches input order.
std::vector<LevelMetrics> evaluate_levels(const std::vector<TileGrid>& grids, const MovementModel& model,
                                          const MetricsOptions& options = {}, int jobs = 1);

struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<int> counts;

  int bin_of(double v) const;
};

struct Histogram2D {
  int x_metric = 0;
  int y_metric = 0;
  std::vector<int> counts;  // bins x bins, row-major by y bin
};

struct MetricStats {
  double mean = 0.0;
  std::optional<double> std;  // population std
};

struct BatchSummary {
  int count = 0;
  double completable_fraction = 0.0;  // C
  std::optional<double> completable_std;
  std::array<MetricStats, kNumMetrics> stats;
  int bins = 0;
  std::vector<Histogram> histograms;     // per metric
  std::vector<Histogram2D> densities;    // lower-triangle pairs (x < y)
  std::string source;                    // free-form provenance label
};

BatchSummary summarize_batch(const std::vector<LevelMetrics>& metrics, int bins = 20);

// |mean - ref_mean| <= ref_std per metric. Throws MissingStd.
std::array<bool, kNumMetrics> within_one_std(const BatchSummary& batch, const BatchSummary& reference);

// Summary file: `metric,mean,std[,source]` rows with metric in C plus
// kMetricNames; std may be blank.
BatchSummary read_summary_csv(const std::filesystem::path& path);
std::string summary_to_csv(const BatchSummary& s);

// Per-level CSV: level,completable,e,n,d,p,l,r2,j,j_i
std::string metrics_to_csv(const std::vector<std::string>& names, const std::vector<LevelMetrics>& metrics);
std::vector<LevelMetrics> read_metrics_csv(const std::filesystem::path& path,
                                           std::vector<std::string>* names = nullptr);

struct TableRow {
  std::string label;  // e.g. "Y Y N"
  BatchSummary summary;
};

// Markdown table with the reference row first; generated values within one
// reference std are bold. Metrics whose reference has no std stay plain.
std::string render_comparison_table(const TableRow& reference, const std::vector<TableRow>& rows);

std::string format_number(double v);

}  // namespace levelseq
