#pragma once

#include <string>
#include <vector>

#include "levelseq/metrics.hpp"

namespace levelseq {

struct CornerPlot {
  std::string svg;          // self-contained
  std::string density_csv;  // binned counts behind every panel
};

// Diagonal: per-metric histograms (reference drawn as an outline). Lower
// triangle: 2-D density heatmaps with the reference mean marked. Both data
// sets share one axis range per metric.
CornerPlot render_corner_plot(const std::vector<LevelMetrics>& metrics,
                              const std::vector<LevelMetrics>* reference = nullptr, int bins = 20);

}  // namespace levelseq
