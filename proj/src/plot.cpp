#include "levelseq/plot.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/core.h>

#include "levelseq/error.hpp"

namespace levelseq {

namespace {

constexpr double kPanel = 96.0;
constexpr double kGap = 8.0;
constexpr double kMargin = 48.0;

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  int bin(double v, int bins) const {
    if (hi <= lo) return 0;
    return std::clamp(static_cast<int>(std::floor((v - lo) / (hi - lo) * bins)), 0, bins - 1);
  }
};

std::string num(double v) {
  if (std::abs(v) < 0.005) v = 0.0;
  return fmt::format("{:.2f}", v);
}

}  // namespace

CornerPlot render_corner_plot(const std::vector<LevelMetrics>& metrics,
                              const std::vector<LevelMetrics>* reference, int bins) {
  if (metrics.empty()) throw Error(ErrorCode::EmptyBatch, "nothing to plot");
  if (bins < 1) throw Error(ErrorCode::InvalidConfig, "bins must be positive");
  const bool has_ref = reference != nullptr && !reference->empty();

  std::array<Range, kNumMetrics> ranges;
  for (int k = 0; k < kNumMetrics; ++k) {
    double lo = metric_value(metrics[0], k);
    double hi = lo;
    auto widen = [&](const std::vector<LevelMetrics>& set) {
      for (const auto& m : set) {
        lo = std::min(lo, metric_value(m, k));
        hi = std::max(hi, metric_value(m, k));
      }
    };
    widen(metrics);
    if (has_ref) widen(*reference);
    ranges[static_cast<std::size_t>(k)] = {lo, hi};
  }

  auto hist = [&](const std::vector<LevelMetrics>& set, int k) {
    std::vector<int> h(static_cast<std::size_t>(bins), 0);
    for (const auto& m : set) ++h[static_cast<std::size_t>(ranges[static_cast<std::size_t>(k)].bin(metric_value(m, k), bins))];
    return h;
  };
  auto density = [&](const std::vector<LevelMetrics>& set, int x, int y) {
    std::vector<int> d(static_cast<std::size_t>(bins * bins), 0);
    for (const auto& m : set) {
      const int bx = ranges[static_cast<std::size_t>(x)].bin(metric_value(m, x), bins);
      const int by = ranges[static_cast<std::size_t>(y)].bin(metric_value(m, y), bins);
      ++d[static_cast<std::size_t>(by * bins + bx)];
    }
    return d;
  };
  auto mean_of = [](const std::vector<LevelMetrics>& set, int k) {
    double s = 0.0;
    for (const auto& m : set) s += metric_value(m, k);
    return s / static_cast<double>(set.size());
  };

  CornerPlot out;
  out.density_csv = "source,x_metric,y_metric,x_bin,y_bin,x_lo,x_hi,y_lo,y_hi,count\n";
  auto bin_edges = [&](int k, int b) {
    const auto& r = ranges[static_cast<std::size_t>(k)];
    const double w = (r.hi - r.lo) / bins;
    return std::pair{r.lo + w * b, r.lo + w * (b + 1)};
  };
  auto emit_csv = [&](const char* source, const std::vector<LevelMetrics>& set) {
    for (int k = 0; k < kNumMetrics; ++k) {
      const auto h = hist(set, k);
      for (int b = 0; b < bins; ++b) {
        auto [lo, hi] = bin_edges(k, b);
        out.density_csv += fmt::format("{},{},,{},,{},{},,,{}\n", source, kMetricNames[static_cast<std::size_t>(k)], b,
                                       format_number(lo), format_number(hi), h[static_cast<std::size_t>(b)]);
      }
    }
    for (int x = 0; x < kNumMetrics; ++x) {
      for (int y = x + 1; y < kNumMetrics; ++y) {
        const auto d = density(set, x, y);
        for (int by = 0; by < bins; ++by) {
          for (int bx = 0; bx < bins; ++bx) {
            const int c = d[static_cast<std::size_t>(by * bins + bx)];
            if (c == 0) continue;
            auto [xlo, xhi] = bin_edges(x, bx);
            auto [ylo, yhi] = bin_edges(y, by);
            out.density_csv += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", source,
                                           kMetricNames[static_cast<std::size_t>(x)],
                                           kMetricNames[static_cast<std::size_t>(y)], bx, by, format_number(xlo),
                                           format_number(xhi), format_number(ylo), format_number(yhi), c);
          }
        }
      }
    }
  };
  emit_csv("generated", metrics);
  if (has_ref) emit_csv("reference", *reference);

  const double size = 2 * kMargin + kNumMetrics * kPanel + (kNumMetrics - 1) * kGap;
  std::string& svg = out.svg;
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{0}\" viewBox=\"0 0 {0} {0}\" "
      "font-family=\"sans-serif\" font-size=\"10\">\n",
      num(size));
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{0}\" fill=\"white\"/>\n", num(size));
  svg += fmt::format("<text x=\"{}\" y=\"20\" font-size=\"13\">Expressive range ({} levels{})</text>\n", num(kMargin),
                     metrics.size(), has_ref ? fmt::format(", reference {}", reference->size()) : "");

  auto origin = [&](int col, int row) {
    return std::pair{kMargin + col * (kPanel + kGap), kMargin + row * (kPanel + kGap)};
  };
  const double cell = kPanel / bins;

  for (int k = 0; k < kNumMetrics; ++k) {
    auto [ox, oy] = origin(k, k);
    const auto h = hist(metrics, k);
    std::vector<int> rh;
    if (has_ref) rh = hist(*reference, k);
    const double frac_max = [&] {
      double m = 0.0;
      for (int v : h) m = std::max(m, static_cast<double>(v) / static_cast<double>(metrics.size()));
      for (int v : rh) m = std::max(m, static_cast<double>(v) / static_cast<double>(reference->size()));
      return m > 0.0 ? m : 1.0;
    }();
    svg += fmt::format("<g id=\"hist-{}\">\n", kMetricNames[static_cast<std::size_t>(k)]);
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>\n", num(ox),
                       num(oy), num(kPanel), num(kPanel));
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(h[static_cast<std::size_t>(b)]) / static_cast<double>(metrics.size());
      if (f == 0.0) continue;
      const double bh = kPanel * f / frac_max;
      svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#3b6ea8\"/>\n", num(ox + b * cell),
                         num(oy + kPanel - bh), num(cell), num(bh));
    }
    if (has_ref) {
      std::string pts;
      for (int b = 0; b < bins; ++b) {
        const double f = static_cast<double>(rh[static_cast<std::size_t>(b)]) / static_cast<double>(reference->size());
        const double y = oy + kPanel - kPanel * f / frac_max;
        pts += fmt::format("{},{} {},{} ", num(ox + b * cell), num(y), num(ox + (b + 1) * cell), num(y));
      }
      pts.pop_back();
      svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"#d0542c\" stroke-width=\"1.5\"/>\n", pts);
    }
    const auto& r = ranges[static_cast<std::size_t>(k)];
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num(ox + kPanel / 2),
                       num(oy - 4), kMetricNames[static_cast<std::size_t>(k)]);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"8\">{}</text>\n", num(ox), num(oy + kPanel + 9),
                       format_number(r.lo));
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"8\" text-anchor=\"end\">{}</text>\n", num(ox + kPanel),
                       num(oy + kPanel + 9), format_number(r.hi));
    svg += "</g>\n";
  }

  for (int x = 0; x < kNumMetrics; ++x) {
    for (int y = x + 1; y < kNumMetrics; ++y) {
      auto [ox, oy] = origin(x, y);
      const auto d = density(metrics, x, y);
      const int peak = std::max(1, *std::max_element(d.begin(), d.end()));
      svg += fmt::format("<g id=\"density-{}-{}\">\n", kMetricNames[static_cast<std::size_t>(x)],
                         kMetricNames[static_cast<std::size_t>(y)]);
      svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>\n", num(ox),
                         num(oy), num(kPanel), num(kPanel));
      for (int by = 0; by < bins; ++by) {
        for (int bx = 0; bx < bins; ++bx) {
          const int c = d[static_cast<std::size_t>(by * bins + bx)];
          if (c == 0) continue;
          svg += fmt::format(
              "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#3b6ea8\" fill-opacity=\"{}\"/>\n",
              num(ox + bx * cell), num(oy + kPanel - (by + 1) * cell), num(cell), num(cell),
              num(0.15 + 0.85 * static_cast<double>(c) / peak));
        }
      }
      if (has_ref) {
        const auto& rx = ranges[static_cast<std::size_t>(x)];
        const auto& ry = ranges[static_cast<std::size_t>(y)];
        auto frac = [](const Range& r, double v) { return r.hi > r.lo ? (v - r.lo) / (r.hi - r.lo) : 0.5; };
        const double px = ox + kPanel * frac(rx, mean_of(*reference, x));
        const double py = oy + kPanel - kPanel * frac(ry, mean_of(*reference, y));
        svg += fmt::format("<path d=\"M{} {}h6M{} {}v6\" stroke=\"#d0542c\" stroke-width=\"1.5\"/>\n", num(px - 3),
                           num(py), num(px), num(py - 3));
      }
      if (x == 0) {
        svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", num(ox - 4),
                           num(oy + kPanel / 2), kMetricNames[static_cast<std::size_t>(y)]);
      }
      svg += "</g>\n";
    }
  }
  svg += "</svg>\n";
  return out;
}

}  // namespace levelseq
