#pragma once

#include <string>
#include <vector>

#include "hymem_cli/trajectory_io.hpp"

namespace hymem::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<double> markers;  ///< x positions marked on the axis (jump instants)
  double width = 720.0;
  double height = 420.0;
};

/// Standalone SVG line plot.
[[nodiscard]] std::string render_svg(const PlotSpec& spec);

/// Writes `<stem>.norm.svg` and, when velocity columns exist, `<stem>.velocity.svg`.
/// Returns the paths written.
std::vector<std::string> plot_trajectory(const std::string& csv_path, const std::string& stem,
                                         const std::string& title);

}  // namespace hymem::cli
