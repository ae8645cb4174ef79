#include "si/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace si {

namespace {

constexpr int kPanelW = 860, kPanelH = 110, kMarginL = 70, kMarginR = 20, kMarginV = 16;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void polyline(std::ostringstream& os, const std::vector<double>& values, double rate_hz,
              double duration, int x0, int y0, double lo, double hi, const char* color,
              bool dashed) {
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\"";
  if (dashed) os << " stroke-dasharray=\"5,3\"";
  os << " points=\"";
  const double span = hi - lo;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double t = static_cast<double>(i) / rate_hz;
    const double x = x0 + (duration > 0 ? t / duration : 0.0) * kPanelW;
    const double yn = (values[i] - lo) / span;  // 0 bottom .. 1 top
    const double y = y0 + (1.0 - yn) * kPanelH;
    os << fmt(x) << "," << fmt(y) << " ";
  }
  os << "\"/>\n";
}

}  // namespace

void write_trajectory_svg(const std::string& path, const TrajectoryTable& est,
                          const TrajectoryTable* ref) {
  if (est.names.empty() || est.frames() == 0)
    fail(ErrorCategory::EmptyInput, "nothing to plot: trajectory table is empty");

  const int n = static_cast<int>(est.names.size());
  const int width = kMarginL + kPanelW + kMarginR;
  const int height = n * (kPanelH + kMarginV) + kMarginV + 20;
  const double duration = static_cast<double>(est.frames()) / est.rate_hz;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (int c = 0; c < n; ++c) {
    const int y0 = kMarginV + c * (kPanelH + kMarginV);
    const auto& name = est.names[static_cast<std::size_t>(c)];
    const auto& col = est.columns[static_cast<std::size_t>(c)];
    const std::vector<double>* ref_col = nullptr;
    if (ref) {
      const int rc = ref->column_index(name);
      if (rc >= 0) ref_col = &ref->columns[static_cast<std::size_t>(rc)];
    }

    double lo = -1.0, hi = 1.0;
    auto widen = [&](const std::vector<double>& v) {
      for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    };
    widen(col);
    if (ref_col) widen(*ref_col);
    if (hi - lo < 1e-9) hi = lo + 1.0;

    os << "<rect x=\"" << kMarginL << "\" y=\"" << y0 << "\" width=\"" << kPanelW
       << "\" height=\"" << kPanelH << "\" fill=\"none\" stroke=\"#ccc\"/>\n";
    // Zero line when it is inside the panel range.
    if (lo < 0 && hi > 0) {
      const double yz = y0 + (1.0 - (0.0 - lo) / (hi - lo)) * kPanelH;
      os << "<line x1=\"" << kMarginL << "\" y1=\"" << fmt(yz) << "\" x2=\""
         << (kMarginL + kPanelW) << "\" y2=\"" << fmt(yz) << "\" stroke=\"#eee\"/>\n";
    }
    os << "<text x=\"8\" y=\"" << (y0 + kPanelH / 2) << "\" font-family=\"sans-serif\" "
       << "font-size=\"13\" dominant-baseline=\"middle\">" << name << "</text>\n";
    if (ref_col)
      polyline(os, *ref_col, ref->rate_hz, duration, kMarginL, y0, lo, hi, "#888", true);
    polyline(os, col, est.rate_hz, duration, kMarginL, y0, lo, hi, "#1f5fbf", false);
  }

  os << "<text x=\"" << (kMarginL + kPanelW / 2) << "\" y=\"" << (height - 6)
     << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">time (s), 0 to "
     << fmt(duration) << "</text>\n";
  os << "</svg>\n";

  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCategory::Io, "cannot write SVG: " + path);
  out << os.str();
  if (!out) fail(ErrorCategory::Io, "SVG write failed: " + path);
}

}  // namespace si
