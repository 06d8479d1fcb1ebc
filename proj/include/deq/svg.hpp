#ifndef DEQ_SVG_HPP
#define DEQ_SVG_HPP

#include <string>
#include <vector>

namespace deq {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct SvgAxes {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
};

// Minimal standalone line plot (polylines + ticks + legend); nonpositive
// values are dropped on log axes.
std::string render_line_plot(const SvgAxes& axes,
                             const std::vector<SvgSeries>& series);

// Grouped bar chart: one bar per (label, value).
std::string render_bar_chart(const std::string& title,
                             const std::vector<std::string>& labels,
                             const std::vector<double>& values,
                             const std::string& ylabel);

}  // namespace deq

#endif  // DEQ_SVG_HPP
