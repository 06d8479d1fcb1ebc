#include "deq/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace deq {

namespace {

constexpr double kW = 640.0, kH = 420.0;
constexpr double kL = 70.0, kR = 150.0, kT = 40.0, kB = 55.0;

const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % 8];
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

struct Scale {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double map01(double v) const {
    const double a = log ? std::log10(v) : v;
    const double l = log ? std::log10(lo) : lo;
    const double h = log ? std::log10(hi) : hi;
    return (h - l) == 0.0 ? 0.5 : (a - l) / (h - l);
  }
};

Scale fit_scale(const std::vector<const std::vector<double>*>& cols, bool log) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto* c : cols) {
    for (double v : *c) {
      if (log && v <= 0.0) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) { lo = log ? 0.1 : 0.0; hi = 1.0; }
  if (lo == hi) { lo = log ? lo * 0.5 : lo - 0.5; hi = log ? hi * 2.0 : hi + 0.5; }
  Scale s;
  s.lo = lo; s.hi = hi; s.log = log;
  return s;
}

std::vector<double> ticks_of(const Scale& s, int want = 5) {
  std::vector<double> t;
  if (s.log) {
    const int e0 = static_cast<int>(std::floor(std::log10(s.lo)));
    const int e1 = static_cast<int>(std::ceil(std::log10(s.hi)));
    for (int e = e0; e <= e1; ++e) {
      const double v = std::pow(10.0, e);
      if (v >= s.lo * 0.999 && v <= s.hi * 1.001) t.push_back(v);
    }
    if (t.size() < 2) { t = {s.lo, s.hi}; }
  } else {
    for (int i = 0; i <= want; ++i) {
      t.push_back(s.lo + (s.hi - s.lo) * i / want);
    }
  }
  return t;
}

}  // namespace

std::string render_line_plot(const SvgAxes& axes,
                             const std::vector<SvgSeries>& series) {
  std::vector<const std::vector<double>*> xs, ys;
  for (const auto& s : series) { xs.push_back(&s.x); ys.push_back(&s.y); }
  const Scale sx = fit_scale(xs, axes.logx);
  const Scale sy = fit_scale(ys, axes.logy);
  const double pw = kW - kL - kR, ph = kH - kT - kB;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
      << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << axes.title
      << "</text>\n";

  // frame
  out << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#333\"/>\n";

  for (double tx : ticks_of(sx)) {
    const double px = kL + sx.map01(tx) * pw;
    out << "<line x1=\"" << px << "\" y1=\"" << kT + ph << "\" x2=\"" << px
        << "\" y2=\"" << kT + ph + 5 << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << kT + ph + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << fmt(tx) << "</text>\n";
  }
  for (double ty : ticks_of(sy)) {
    const double py = kT + (1.0 - sy.map01(ty)) * ph;
    out << "<line x1=\"" << kL - 5 << "\" y1=\"" << py << "\" x2=\"" << kL
        << "\" y2=\"" << py << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << kL - 8 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << fmt(ty) << "</text>\n";
  }
  out << "<text x=\"" << kL + pw / 2 << "\" y=\"" << kH - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\">" << axes.xlabel << "</text>\n";
  out << "<text x=\"18\" y=\"" << kT + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\" transform=\"rotate(-90 18 " << kT + ph / 2 << ")\">"
      << axes.ylabel << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    std::ostringstream pts;
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size();
         ++i) {
      const double vx = series[s].x[i], vy = series[s].y[i];
      if ((sx.log && vx <= 0.0) || (sy.log && vy <= 0.0)) continue;
      const double px = kL + sx.map01(vx) * pw;
      const double py = kT + (1.0 - sy.map01(vy)) * ph;
      pts << fmt(px) << "," << fmt(py) << " ";
    }
    out << "<polyline fill=\"none\" stroke=\"" << palette(s)
        << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
    const double ly = kT + 14 + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << kL + pw + 10 << "\" y1=\"" << ly << "\" x2=\""
        << kL + pw + 30 << "\" y2=\"" << ly << "\" stroke=\"" << palette(s)
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kL + pw + 35 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[s].label
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_bar_chart(const std::string& title,
                             const std::vector<std::string>& labels,
                             const std::vector<double>& values,
                             const std::string& ylabel) {
  const double pw = kW - kL - 40.0, ph = kH - kT - kB;
  double hi = 0.0;
  for (double v : values) hi = std::max(hi, v);
  if (hi <= 0.0) hi = 1.0;
  hi *= 1.15;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
      << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
  out << "<line x1=\"" << kL << "\" y1=\"" << kT + ph << "\" x2=\""
      << kL + pw << "\" y2=\"" << kT + ph << "\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = hi * i / 5.0;
    const double py = kT + ph - ph * i / 5.0;
    out << "<text x=\"" << kL - 8 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << fmt(v) << "</text>\n";
    out << "<line x1=\"" << kL - 5 << "\" y1=\"" << py << "\" x2=\"" << kL
        << "\" y2=\"" << py << "\" stroke=\"#333\"/>\n";
  }
  const std::size_t nb = std::min(labels.size(), values.size());
  const double slot = pw / static_cast<double>(std::max<std::size_t>(nb, 1));
  for (std::size_t i = 0; i < nb; ++i) {
    const double h = ph * values[i] / hi;
    const double x = kL + slot * static_cast<double>(i) + slot * 0.15;
    out << "<rect x=\"" << x << "\" y=\"" << kT + ph - h << "\" width=\""
        << slot * 0.7 << "\" height=\"" << h << "\" fill=\"" << palette(i)
        << "\"/>\n";
    out << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << kT + ph + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"10\">" << labels[i] << "</text>\n";
    out << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << kT + ph - h - 5
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"10\">" << fmt(values[i]) << "</text>\n";
  }
  out << "<text x=\"18\" y=\"" << kT + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\" transform=\"rotate(-90 18 " << kT + ph / 2 << ")\">"
      << ylabel << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace deq
