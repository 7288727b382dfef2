#pragma once

// SVG frames of a geodesic. Each edge is one <line>; its stroke opacity is
// the edge weight clamped to [0, 1]. Coordinates are written unchanged inside
// a group that flips the y axis, so the file shows the usual math
// orientation.

#include "sge/graphcore.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace sge {

enum class Projection { xy, xz, yz, iso };

inline Projection parse_projection(const std::string& s) {
  if (s == "xy") return Projection::xy;
  if (s == "xz") return Projection::xz;
  if (s == "yz") return Projection::yz;
  if (s == "iso") return Projection::iso;
  throw Error(ErrorCategory::input, "projection must be one of xy, xz, yz, iso");
}

template <int Dim>
Eigen::Vector2d project(const Vec<Dim>& v, Projection p) {
  if constexpr (Dim == 2) {
    return v;
  } else {
    switch (p) {
      case Projection::xy: return {v[0], v[1]};
      case Projection::xz: return {v[0], v[2]};
      case Projection::yz: return {v[1], v[2]};
      case Projection::iso: {
        const double c = std::sqrt(3.0) / 2.0;
        return {c * (v[0] - v[1]), v[2] + 0.5 * (v[0] + v[1])};
      }
    }
    return {v[0], v[1]};
  }
}

struct Segment2 {
  Eigen::Vector2d a, b;
  double opacity;
};

template <int Dim>
std::vector<Segment2> project_graph(const PolygonalGraph<Dim>& g, Projection p) {
  std::vector<Segment2> out;
  std::size_t edge = 0;
  for (const auto& comp : g.vertices)
    for (std::size_t i = 0; i + 1 < comp.size(); ++i, ++edge)
      out.push_back({project<Dim>(comp[i], p), project<Dim>(comp[i + 1], p),
                     std::clamp(g.weights[edge], 0.0, 1.0)});
  return out;
}

struct SvgStyle {
  std::string path_color = "#1f5fbf";
  std::string target_color = "#d9480f";
  double stroke_width = 0.006;  // in shape units
  double margin = 0.05;         // fraction of the larger extent
};

struct Bounds2 {
  Eigen::Vector2d lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Eigen::Vector2d hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  void add(const std::vector<Segment2>& segs) {
    for (const auto& s : segs)
      for (const auto& v : {s.a, s.b}) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
      }
  }
};

/// One frame; `overlay` (possibly empty) is drawn in the target color with
/// full opacity. The view box is given so that all frames of a sequence share
/// it.
inline std::string render_svg(const std::vector<Segment2>& frame,
                              const std::vector<Segment2>& overlay, const Bounds2& bounds,
                              const SvgStyle& style = {}) {
  const Eigen::Vector2d ext = (bounds.hi - bounds.lo).cwiseMax(1e-12);
  const double pad = style.margin * ext.maxCoeff();
  const double x0 = bounds.lo.x() - pad, y0 = bounds.lo.y() - pad;
  const double w = ext.x() + 2 * pad, h = ext.y() + 2 * pad;

  std::ostringstream os;
  os << std::setprecision(17);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 800.0 * w / std::max(w, h)
     << "\" height=\"" << 800.0 * h / std::max(w, h) << "\" viewBox=\"" << x0 << ' '
     << -(y0 + h) << ' ' << w << ' ' << h << "\">\n";
  os << "<g transform=\"scale(1,-1)\" stroke-linecap=\"round\" stroke-width=\""
     << style.stroke_width * std::max(w, h) << "\" fill=\"none\">\n";
  auto emit = [&](const std::vector<Segment2>& segs, const std::string& color, const char* cls,
                  bool weighted) {
    os << "<g class=\"" << cls << "\" stroke=\"" << color << "\">\n";
    for (const auto& s : segs) {
      os << "<line x1=\"" << s.a.x() << "\" y1=\"" << s.a.y() << "\" x2=\"" << s.b.x()
         << "\" y2=\"" << s.b.y() << "\"";
      if (weighted) os << " stroke-opacity=\"" << s.opacity << "\"";
      os << "/>\n";
    }
    os << "</g>\n";
  };
  if (!overlay.empty()) emit(overlay, style.target_color, "target", false);
  emit(frame, style.path_color, "path", true);
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace sge
