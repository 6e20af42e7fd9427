#pragma once

/// @file svg.hpp
/// @brief Dependency-free SVG output: line charts and planar ROA pictures.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace ddc::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Frame {
  double width = 640, height = 420;
  double left = 70, right = 20, top = 36, bottom = 50;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

  double X(double v) const { return left + (v - x0) / (x1 - x0) * (width - left - right); }
  double Y(double v) const { return height - bottom - (v - y0) / (y1 - y0) * (height - top - bottom); }
};

namespace internal {

inline const char* Color(std::size_t k) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return kPalette[k % 10];
}

inline std::string Fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

inline void Axes(std::ostringstream& out, const Frame& f, const std::string& title, const std::string& xl,
                 const std::string& yl) {
  out << "<rect x='" << f.left << "' y='" << f.top << "' width='" << f.width - f.left - f.right << "' height='"
      << f.height - f.top - f.bottom << "' fill='none' stroke='black'/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double vx = f.x0 + (f.x1 - f.x0) * i / 4.0, vy = f.y0 + (f.y1 - f.y0) * i / 4.0;
    out << "<text x='" << f.X(vx) << "' y='" << f.height - f.bottom + 18
        << "' font-size='11' text-anchor='middle'>" << Fmt(vx) << "</text>\n";
    out << "<text x='" << f.left - 6 << "' y='" << f.Y(vy) + 4 << "' font-size='11' text-anchor='end'>" << Fmt(vy)
        << "</text>\n";
  }
  out << "<text x='" << f.width / 2 << "' y='20' font-size='14' text-anchor='middle'>" << title << "</text>\n";
  out << "<text x='" << f.width / 2 << "' y='" << f.height - 10 << "' font-size='12' text-anchor='middle'>" << xl
      << "</text>\n";
  out << "<text x='16' y='" << f.height / 2 << "' font-size='12' text-anchor='middle' transform='rotate(-90 16 "
      << f.height / 2 << ")'>" << yl << "</text>\n";
}

inline std::string Open(const Frame& f) {
  std::ostringstream out;
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << f.width << "' height='" << f.height << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n";
  return out.str();
}

}  // namespace internal

inline std::string LineChart(const std::vector<Series>& series, const std::string& title, const std::string& xlabel,
                             const std::string& ylabel) {
  Frame f;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  }
  if (!(xmax > xmin)) xmax = xmin + 1;
  if (!(ymax > ymin)) ymax = ymin + 1;
  const double pad = 0.05 * (ymax - ymin);
  f.x0 = xmin, f.x1 = xmax, f.y0 = ymin - pad, f.y1 = ymax + pad;
  std::ostringstream out;
  out << internal::Open(f);
  internal::Axes(out, f, title, xlabel, ylabel);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    out << "<polyline fill='none' stroke='" << internal::Color(k) << "' stroke-width='1.5' points='";
    for (std::size_t i = 0; i < s.x.size(); ++i) out << f.X(s.x[i]) << "," << f.Y(s.y[i]) << " ";
    out << "'/>\n";
    out << "<text x='" << f.width - f.right - 8 << "' y='" << f.top + 16 + 14 * k << "' font-size='11' fill='"
        << internal::Color(k) << "' text-anchor='end'>" << s.name << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

/// Planar ROA picture: cells where `decreasing` holds shaded grey, the level
/// set (x - c)^T Pinv (x - c) = gamma drawn in blue.
inline std::string RoaPlot(const std::function<bool(double, double)>& decreasing, const Eigen::Matrix2d& Pinv,
                           const Eigen::Vector2d& center, double gamma, double x0, double x1, double y0, double y1,
                           const std::string& title, const std::string& xlabel = "x1",
                           const std::string& ylabel = "x2", int cells = 120) {
  Frame f;
  f.x0 = x0, f.x1 = x1, f.y0 = y0, f.y1 = y1;
  std::ostringstream out;
  out << internal::Open(f);
  const double dx = (x1 - x0) / cells, dy = (y1 - y0) / cells;
  const double w = f.X(x0 + dx) - f.X(x0), h = f.Y(y0) - f.Y(y0 + dy);
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j) {
      const double cx = x0 + (i + 0.5) * dx, cy = y0 + (j + 0.5) * dy;
      if (decreasing(cx, cy))
        out << "<rect x='" << f.X(x0 + i * dx) << "' y='" << f.Y(y0 + (j + 1) * dy) << "' width='" << w + 0.3
            << "' height='" << h + 0.3 << "' fill='#c8c8c8' stroke='none'/>\n";
    }
  if (gamma > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Pinv);
    out << "<polygon fill='#7fb2e5' fill-opacity='0.7' stroke='#1f4e9a' points='";
    for (int k = 0; k < 256; ++k) {
      const double th = 2.0 * M_PI * k / 256;
      const Eigen::Vector2d u(std::cos(th) * std::sqrt(gamma / es.eigenvalues()(0)),
                              std::sin(th) * std::sqrt(gamma / es.eigenvalues()(1)));
      const Eigen::Vector2d p = center + es.eigenvectors() * u;
      out << f.X(p(0)) << "," << f.Y(p(1)) << " ";
    }
    out << "'/>\n";
  }
  internal::Axes(out, f, title, xlabel, ylabel);
  out << "</svg>\n";
  return out.str();
}

}  // namespace ddc::svg
