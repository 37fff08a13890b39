#include "hymem_cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace hymem::cli {

namespace {

std::string fmt(double v, const char* f = "%.2f") {
  char buf[32];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

// Round axis step: 1, 2 or 5 times a power of ten.
double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      return m * mag;
    }
  }
  return 10.0 * mag;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -x0;
  double y0 = x0;
  double y1 = -x0;
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
    }
  }
  if (!std::isfinite(x0)) {
    x0 = 0.0;
    x1 = 1.0;
    y0 = 0.0;
    y1 = 1.0;
  }
  if (x1 <= x0) {
    x1 = x0 + 1.0;
  }
  if (y1 <= y0) {
    y1 = y0 + 1.0;
    y0 -= 1.0;
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double l = 70.0;
  const double r = 20.0;
  const double t = 40.0;
  const double b = 55.0;
  const double pw = spec.width - l - r;
  const double ph = spec.height - t - b;
  auto px = [&](double x) { return l + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return t + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(spec.width, "%.0f") << "\" height=\""
    << fmt(spec.height, "%.0f") << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << fmt(spec.width / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(spec.title) << "</text>\n";

  const double xs = nice_step(x1 - x0, 8);
  for (double v = std::ceil(x0 / xs) * xs; v <= x1 + 1e-9 * xs; v += xs) {
    o << "<line x1=\"" << fmt(px(v)) << "\" y1=\"" << fmt(t) << "\" x2=\"" << fmt(px(v)) << "\" y2=\""
      << fmt(t + ph) << "\" stroke=\"#eeeeee\"/>\n";
    o << "<text x=\"" << fmt(px(v)) << "\" y=\"" << fmt(t + ph + 16) << "\" text-anchor=\"middle\">"
      << fmt(v, "%g") << "</text>\n";
  }
  const double ys = nice_step(y1 - y0, 6);
  for (double v = std::ceil(y0 / ys) * ys; v <= y1 + 1e-9 * ys; v += ys) {
    const double vv = std::abs(v) < 1e-12 * ys ? 0.0 : v;
    o << "<line x1=\"" << fmt(l) << "\" y1=\"" << fmt(py(vv)) << "\" x2=\"" << fmt(l + pw) << "\" y2=\""
      << fmt(py(vv)) << "\" stroke=\"#eeeeee\"/>\n";
    o << "<text x=\"" << fmt(l - 6) << "\" y=\"" << fmt(py(vv) + 4) << "\" text-anchor=\"end\">" << fmt(vv, "%g")
      << "</text>\n";
  }
  o << "<rect x=\"" << fmt(l) << "\" y=\"" << fmt(t) << "\" width=\"" << fmt(pw) << "\" height=\"" << fmt(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Jump instants as short ticks above the time axis.
  if (!spec.markers.empty()) {
    o << "<g stroke=\"#d62728\" stroke-width=\"0.8\" opacity=\"0.6\">\n";
    for (double m : spec.markers) {
      o << "<line x1=\"" << fmt(px(m)) << "\" y1=\"" << fmt(t + ph) << "\" x2=\"" << fmt(px(m)) << "\" y2=\""
        << fmt(t + ph - 6) << "\"/>\n";
    }
    o << "</g>\n";
  }
  for (const auto& s : spec.series) {
    o << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        o << fmt(px(s.x[i])) << ',' << fmt(py(s.y[i])) << ' ';
      }
    }
    o << "\"/>\n";
  }
  double ly = t + 14;
  for (const auto& s : spec.series) {
    o << "<line x1=\"" << fmt(l + pw - 110) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << fmt(l + pw - 90)
      << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << fmt(l + pw - 84) << "\" y=\"" << fmt(ly) << "\">" << escape(s.label) << "</text>\n";
    ly += 16;
  }
  if (!spec.markers.empty()) {
    o << "<text x=\"" << fmt(l + 4) << "\" y=\"" << fmt(t + ph - 10) << "\" fill=\"#d62728\" font-size=\"10\">"
      << "ticks: jumps</text>\n";
  }
  o << "<text x=\"" << fmt(l + pw / 2) << "\" y=\"" << fmt(spec.height - 12) << "\" text-anchor=\"middle\">"
    << escape(spec.x_label) << "</text>\n";
  o << "<text transform=\"translate(16," << fmt(t + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(spec.y_label) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

std::vector<std::string> plot_trajectory(const std::string& csv_path, const std::string& stem,
                                         const std::string& title) {
  const auto tab = read_table(csv_path);
  const int ct = tab.column("t");
  const int cj = tab.column("j");
  const int cn = tab.column("norm_W");
  if (ct < 0 || cj < 0 || cn < 0) {
    throw TrajectoryError(csv_path + ": missing t, j or norm_W column");
  }
  std::vector<double> t;
  std::vector<double> markers;
  for (std::size_t i = 0; i < tab.rows.size(); ++i) {
    t.push_back(tab.rows[i][static_cast<std::size_t>(ct)]);
    if (i > 0 && tab.rows[i][static_cast<std::size_t>(cj)] > tab.rows[i - 1][static_cast<std::size_t>(cj)]) {
      markers.push_back(t.back());
    }
  }
  auto column = [&](int c) {
    std::vector<double> v;
    for (const auto& row : tab.rows) {
      v.push_back(row[static_cast<std::size_t>(c)]);
    }
    return v;
  };
  std::vector<std::string> written;
  auto write = [&](const std::string& path, const PlotSpec& spec) {
    std::ofstream out(path);
    if (!out) {
      throw TrajectoryError("cannot write '" + path + "'");
    }
    out << render_svg(spec);
    written.push_back(path);
  };

  PlotSpec norm;
  norm.title = title + ": state norm |x(t)|_W";
  norm.x_label = "t [s]";
  norm.y_label = "|x|_W";
  norm.series.push_back({"|x|_W", t, column(cn), "#1f77b4"});
  norm.markers = markers;
  write(stem + ".norm.svg", norm);

  const int v1 = tab.column("v1");
  if (v1 >= 0 && tab.column("v2") >= 0 && tab.column("v3") >= 0) {
    PlotSpec vel;
    vel.title = title + ": velocity";
    vel.x_label = "t [s]";
    vel.y_label = "velocity [m/s]";
    vel.series.push_back({"v1", t, column(v1), "#1f77b4"});
    vel.series.push_back({"v2", t, column(tab.column("v2")), "#2ca02c"});
    vel.series.push_back({"v3", t, column(tab.column("v3")), "#ff7f0e"});
    vel.markers = markers;
    write(stem + ".velocity.svg", vel);
  }
  return written;
}

}  // namespace hymem::cli
