#include "riskforge/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace riskforge::svg {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 170, kTop = 40, kBottom = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void fit_y_range(Plot& plot) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double e = i < s.y_err.size() ? s.y_err[i] : 0.0;
      if (!std::isfinite(s.y[i])) continue;
      lo = std::min(lo, s.y[i] - e);
      hi = std::max(hi, s.y[i] + e);
    }
  }
  if (!std::isfinite(lo)) return;
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  plot.y_min = lo - pad;
  plot.y_max = hi + pad;
}

std::string render(const Plot& plot) {
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const double xspan = plot.x_max - plot.x_min, yspan = plot.y_max - plot.y_min;
  auto px = [&](double x) { return kLeft + (x - plot.x_min) / xspan * pw; };
  auto py = [&](double y) { return kTop + ph - (y - plot.y_min) / yspan * ph; };
  auto clampx = [&](double x) { return std::clamp(x, plot.x_min, plot.x_max); };
  auto clampy = [&](double y) { return std::clamp(y, plot.y_min, plot.y_max); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(plot.title) << "</text>\n";
  out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = plot.x_min + xspan * i / 5.0, yv = plot.y_min + yspan * i / 5.0;
    out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">"
        << tick(xv) << "</text>\n";
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
        << "</text>\n";
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
        << num(py(yv)) << "\" stroke=\"#eeeeee\"/>\n";
  }
  out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 18) << "\" text-anchor=\"middle\">"
      << escape(plot.x_label) << "</text>\n";
  out << "<text transform=\"translate(18 " << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(plot.y_label) << "</text>\n";
  if (plot.diagonal) {
    const double a = std::max(plot.x_min, plot.y_min), b = std::min(plot.x_max, plot.y_max);
    out << "<line x1=\"" << num(px(a)) << "\" y1=\"" << num(py(a)) << "\" x2=\"" << num(px(b)) << "\" y2=\""
        << num(py(b)) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  }
  for (const auto& v : plot.vlines) {
    if (!(v.x >= plot.x_min && v.x <= plot.x_max)) continue;
    out << "<line x1=\"" << num(px(v.x)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px(v.x)) << "\" y2=\""
        << num(kTop + ph) << "\" stroke=\"black\" stroke-dasharray=\"6 4\"/>\n";
    out << "<text x=\"" << num(px(v.x) + 3) << "\" y=\"" << num(kTop + 14) << "\">" << escape(v.label)
        << "</text>\n";
  }
  for (std::size_t s = 0; s < plot.series.size(); ++s) {
    const Series& ser = plot.series[s];
    const char* color = kPalette[s % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
    if (ser.dashed) out << " stroke-dasharray=\"5 3\"";
    out << " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
      if (!std::isfinite(ser.x[i]) || !std::isfinite(ser.y[i])) continue;
      if (!first) out << ' ';
      out << num(px(clampx(ser.x[i]))) << ',' << num(py(clampy(ser.y[i])));
      first = false;
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < ser.y_err.size() && i < ser.x.size(); ++i) {
      if (!std::isfinite(ser.y[i])) continue;
      out << "<line x1=\"" << num(px(ser.x[i])) << "\" y1=\"" << num(py(clampy(ser.y[i] - ser.y_err[i])))
          << "\" x2=\"" << num(px(ser.x[i])) << "\" y2=\"" << num(py(clampy(ser.y[i] + ser.y_err[i])))
          << "\" stroke=\"" << color << "\" stroke-opacity=\"0.5\"/>\n";
    }
    if (ser.markers) {
      for (std::size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
        if (!std::isfinite(ser.y[i])) continue;
        out << "<circle cx=\"" << num(px(clampx(ser.x[i]))) << "\" cy=\"" << num(py(clampy(ser.y[i])))
            << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      }
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << num(kLeft + pw + 10) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kLeft + pw + 30)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (ser.dashed) out << " stroke-dasharray=\"5 3\"";
    out << "/>\n<text x=\"" << num(kLeft + pw + 34) << "\" y=\"" << num(ly + 4) << "\" font-size=\"10\">"
        << escape(ser.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace riskforge::svg
