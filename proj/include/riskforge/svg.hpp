#pragma once

#include <string>
#include <vector>

namespace riskforge::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
  std::vector<double> y_err;  // optional symmetric error bars
  bool markers = false;
};

struct VLine {
  double x = 0.0;
  std::string label;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  std::vector<Series> series;
  std::vector<VLine> vlines;
  bool diagonal = false;  // reference y = x line
};

/// Fixed-size standalone SVG line chart. Coordinates are printed with two
/// decimals so output is byte-stable.
std::string render(const Plot& plot);

/// Limits that enclose every finite point of every series, padded by 5%.
void fit_y_range(Plot& plot);

}  // namespace riskforge::svg
