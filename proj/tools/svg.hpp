#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dagma_dce/metrics.hpp"

namespace dce::cli {

// One box in a panel: a label under it and its statistics.
struct BoxSeries {
  std::string label;
  BoxStats stats;
};

struct BoxPanel {
  std::string title;
  std::vector<BoxSeries> boxes;
};

// Panels laid out left to right, whiskers at min/max.
std::string svg_box_panels(const std::vector<BoxPanel>& panels);

// Cell (i, j) colored by est(i, j) - truth(i, j) on a blue-white-red scale;
// cells with a true edge get an outline whose width grows with |truth(i, j)|.
std::string svg_heatmap(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth, const std::string& title);

}  // namespace dce::cli
