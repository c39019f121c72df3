#pragma once

// Self-contained SVG phase portraits: one panel per problem view with a
// streamline grid, overlaid polylines, critical-point markers, a dashed
// predicted cycle and the detected cycle drawn in white.

#include "rmlab/analysis.hpp"

#include <cstdio>
#include <ostream>

namespace rmlab {

struct PortraitBox {
  double xmin = -2.0;
  double xmax = 2.0;
  double ymin = -2.0;
  double ymax = 2.0;

  void validate() const {
    if (!(xmax > xmin) || !(ymax > ymin)) throw ConfigError("portrait box is degenerate");
  }
};

struct PortraitCurve {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<Vec> points;
};

struct PortraitPanel {
  std::string title;
  std::optional<Problem> problem;  // streamlines are skipped without one
  std::vector<PortraitCurve> curves;
  std::vector<CriticalPoint> critical_points;
  std::optional<double> predicted_radius;
  std::vector<Vec> detected_cycle;  // one revolution, drawn white
};

struct PortraitSpec {
  PortraitBox box;
  int streamline_grid = 20;
  double panel_size = 360.0;
  std::vector<PortraitPanel> panels;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string svg_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
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

// Keep at most `limit` points of a long polyline.
inline std::vector<Vec> thin(const std::vector<Vec>& pts, std::size_t limit) {
  if (pts.size() <= limit) return pts;
  std::vector<Vec> out;
  const double stride = static_cast<double>(pts.size() - 1) / static_cast<double>(limit - 1);
  for (std::size_t k = 0; k < limit; ++k) out.push_back(pts[static_cast<std::size_t>(std::round(k * stride))]);
  return out;
}

}  // namespace detail

/// Write the portrait. Output bytes depend only on the spec.
inline void render_portrait(std::ostream& out, const PortraitSpec& spec) {
  spec.box.validate();
  if (spec.streamline_grid < 1) throw ConfigError("portrait streamline grid must be >= 1");
  const double margin = 30.0;
  const double size = spec.panel_size;
  const std::size_t panels = std::max<std::size_t>(1, spec.panels.size());
  const double width = static_cast<double>(panels) * (size + margin) + margin;
  const double height = size + 2.0 * margin;
  const auto& b = spec.box;

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::svg_num(width) << "\" height=\""
      << detail::svg_num(height) << "\" viewBox=\"0 0 " << detail::svg_num(width) << ' ' << detail::svg_num(height)
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

  for (std::size_t p = 0; p < spec.panels.size(); ++p) {
    const auto& panel = spec.panels[p];
    const double ox = margin + static_cast<double>(p) * (size + margin);
    const double oy = margin;
    auto sx = [&](double x) { return ox + (x - b.xmin) / (b.xmax - b.xmin) * size; };
    auto sy = [&](double y) { return oy + (b.ymax - y) / (b.ymax - b.ymin) * size; };
    auto polyline = [&](const std::vector<Vec>& pts, const std::string& style) {
      if (pts.size() < 2) return;
      out << "<polyline fill=\"none\" " << style << " points=\"";
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (k) out << ' ';
        out << detail::svg_num(sx(pts[k][0])) << ',' << detail::svg_num(sy(pts[k][1]));
      }
      out << "\"/>\n";
    };

    out << "<g id=\"panel-" << p << "\">\n";
    out << "<rect x=\"" << detail::svg_num(ox) << "\" y=\"" << detail::svg_num(oy) << "\" width=\""
        << detail::svg_num(size) << "\" height=\"" << detail::svg_num(size)
        << "\" fill=\"#2b2b3a\" stroke=\"#000000\"/>\n";
    out << "<text x=\"" << detail::svg_num(ox + size / 2) << "\" y=\"" << detail::svg_num(oy - 10)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << detail::svg_escape(panel.title)
        << "</text>\n";
    out << "<clipPath id=\"clip-" << p << "\"><rect x=\"" << detail::svg_num(ox) << "\" y=\"" << detail::svg_num(oy)
        << "\" width=\"" << detail::svg_num(size) << "\" height=\"" << detail::svg_num(size) << "\"/></clipPath>\n";
    out << "<g clip-path=\"url(#clip-" << p << ")\">\n";

    // streamlines: short RK4 segments of the unit-speed field from a grid
    if (panel.problem && panel.problem->dim() == 2) {
      const int g = spec.streamline_grid;
      const double cell = std::min(b.xmax - b.xmin, b.ymax - b.ymin) / g;
      auto unit_field = [&](const Vec& z) -> Vec {
        Vec v = panel.problem->field(z);
        const double n = v.norm();
        return n > 1e-12 ? Vec(v / n) : Vec(Vec::Zero(2));
      };
      out << "<g id=\"streamlines-" << p << "\">\n";
      for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
          Vec z(2);
          z << b.xmin + (i + 0.5) * (b.xmax - b.xmin) / g, b.ymin + (j + 0.5) * (b.ymax - b.ymin) / g;
          std::vector<Vec> seg{z};
          const int substeps = 8;
          for (int k = 0; k < substeps; ++k) {
            z = rk4_step(unit_field, z, 0.8 * cell / substeps);
            seg.push_back(z);
          }
          polyline(seg, "stroke=\"#8c8ca8\" stroke-width=\"0.8\"");
          out << "<circle cx=\"" << detail::svg_num(sx(z[0])) << "\" cy=\"" << detail::svg_num(sy(z[1]))
              << "\" r=\"1.2\" fill=\"#8c8ca8\"/>\n";
        }
      }
      out << "</g>\n";
    }

    if (panel.predicted_radius) {
      const double r = *panel.predicted_radius;
      out << "<ellipse cx=\"" << detail::svg_num(sx(0.0)) << "\" cy=\"" << detail::svg_num(sy(0.0)) << "\" rx=\""
          << detail::svg_num(r / (b.xmax - b.xmin) * size) << "\" ry=\"" << detail::svg_num(r / (b.ymax - b.ymin) * size)
          << "\" fill=\"none\" stroke=\"#f2c14e\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
    }

    for (const auto& curve : panel.curves) {
      out << "<!-- " << detail::svg_escape(curve.label) << " -->\n";
      polyline(detail::thin(curve.points, 4000),
               "stroke=\"" + detail::svg_escape(curve.color) + "\" stroke-width=\"1.4\"");
    }

    if (!panel.detected_cycle.empty()) {
      auto loop = detail::thin(panel.detected_cycle, 2000);
      loop.push_back(loop.front());
      polyline(loop, "stroke=\"#ffffff\" stroke-width=\"2.5\" id=\"detected-cycle-" + std::to_string(p) + "\"");
    }

    for (const auto& cp : panel.critical_points) {
      const char* color = cp.classification == PointClass::stable     ? "#2ca02c"
                          : cp.classification == PointClass::unstable ? "#d62728"
                                                                      : "#ff7f0e";
      out << "<circle cx=\"" << detail::svg_num(sx(cp.location[0])) << "\" cy=\"" << detail::svg_num(sy(cp.location[1]))
          << "\" r=\"4\" fill=\"" << color << "\" stroke=\"#000000\"><title>" << to_string(cp.classification)
          << "</title></circle>\n";
    }
    out << "</g>\n</g>\n";
  }
  out << "</svg>\n";
}

}  // namespace rmlab
