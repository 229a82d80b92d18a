#pragma once

#include <string>
#include <vector>

namespace tcblran::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartLabels {
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// Static line chart; NaN points break the line. log_y plots log10 of
/// positive values.
std::string line_chart_svg(const std::vector<Series>& series, const ChartLabels& labels,
                           bool log_y = false);

struct BarGroup {
  std::string label;            // category on the x axis
  std::vector<double> values;   // one bar per legend entry
};

/// Grouped bar chart with one colour per legend entry.
std::string bar_chart_svg(const std::vector<BarGroup>& groups, const std::vector<std::string>& legend,
                          const ChartLabels& labels);

}  // namespace tcblran::cli
