#pragma once

#include <string>
#include <vector>

#include "morphoscope/probe.hpp"

namespace morphoscope {

// Deterministic SVG scatter plot of two embedding dimensions with the probe's
// per-value ellipse contours at Mahalanobis radii 1 and 2. Points carry
// class="v<index>" so the plotted coordinates can be checked numerically.
std::string render_scatter_svg(const ProbeModel& model, const Eigen::Ref<const Mat>& X,
                               const std::vector<int>& y, int dim_x, int dim_y,
                               const std::string& provenance_comment);

// Parses the (value index, x, y) triples back out of a rendered SVG.
struct ScatterPoint {
  int value = 0;
  double x = 0.0;
  double y = 0.0;
};
std::vector<ScatterPoint> parse_scatter_points(const std::string& svg);

}  // namespace morphoscope
