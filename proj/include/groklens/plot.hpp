#pragma once

// Static SVG line plots from CSV columns. Output is a pure function of the
// inputs: no timestamps, no generated ids.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "groklens/csv.hpp"
#include "groklens/error.hpp"

namespace groklens {

enum class AxisScale { linear, log };

struct PlotSeries {
  std::string name;
  std::filesystem::path csv;
  std::string x_column;
  std::string y_column;
};

struct PlotPanel {
  std::string title;
  std::vector<PlotSeries> series;
};

struct PlotSpec {
  std::string title;
  std::vector<PlotPanel> panels;
  AxisScale x_scale = AxisScale::linear;
  AxisScale y_scale = AxisScale::linear;
  std::filesystem::path output;
  int panel_width = 420;
  int panel_height = 300;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
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

inline constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return !(lo <= hi); }
  void pad() {
    if (empty()) {
      lo = 0.0;
      hi = 1.0;
    } else if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

inline bool usable(double v, AxisScale scale) { return std::isfinite(v) && (scale == AxisScale::linear || v > 0.0); }
inline double to_axis(double v, AxisScale scale) { return scale == AxisScale::log ? std::log10(v) : v; }

struct LoadedSeries {
  std::string name;
  std::vector<double> xs, ys;
};

}  // namespace detail

/// Renders the plot to a string. Throws DataError for missing columns and
/// ConfigError for a spec without series.
inline std::string render_svg(const PlotSpec& spec) {
  if (spec.panels.empty()) throw ConfigError("plot: no series given");
  for (const auto& p : spec.panels)
    if (p.series.empty()) throw ConfigError("plot: panel '" + p.title + "' has no series");

  const int margin_left = 64, margin_right = 16, margin_top = 40, margin_bottom = 44;
  const int pw = spec.panel_width, ph = spec.panel_height;
  const int total_w = static_cast<int>(spec.panels.size()) * (pw + margin_left + margin_right);
  const int total_h = ph + margin_top + margin_bottom + (spec.title.empty() ? 0 : 24);
  const int top = margin_top + (spec.title.empty() ? 0 : 24);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w << "\" height=\"" << total_h
      << "\" viewBox=\"0 0 " << total_w << ' ' << total_h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << total_w << "\" height=\"" << total_h << "\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    svg << "<text x=\"" << total_w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << detail::xml_escape(spec.title) << "</text>\n";

  for (std::size_t p = 0; p < spec.panels.size(); ++p) {
    const auto& panel = spec.panels[p];
    std::vector<detail::LoadedSeries> loaded;
    detail::Range xr, yr;
    for (const auto& s : panel.series) {
      const auto table = read_csv(s.csv);
      const auto xs = table.column(s.x_column);
      const auto ys = table.column(s.y_column);
      detail::LoadedSeries ls{s.name.empty() ? s.y_column : s.name, {}, {}};
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!detail::usable(xs[i], spec.x_scale) || !detail::usable(ys[i], spec.y_scale)) continue;
        ls.xs.push_back(detail::to_axis(xs[i], spec.x_scale));
        ls.ys.push_back(detail::to_axis(ys[i], spec.y_scale));
        xr.add(ls.xs.back());
        yr.add(ls.ys.back());
      }
      loaded.push_back(std::move(ls));
    }
    xr.pad();
    yr.pad();

    const double x0 = static_cast<double>(p) * (pw + margin_left + margin_right) + margin_left;
    const double y0 = top;
    auto sx = [&](double v) { return x0 + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto sy = [&](double v) { return y0 + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

    svg << "<g class=\"panel\">\n";
    svg << "<rect x=\"" << detail::fmt(x0) << "\" y=\"" << detail::fmt(y0) << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    if (!panel.title.empty())
      svg << "<text x=\"" << detail::fmt(x0 + pw / 2.0) << "\" y=\"" << detail::fmt(y0 - 8)
          << "\" text-anchor=\"middle\">" << detail::xml_escape(panel.title) << "</text>\n";
    constexpr int ticks = 5;
    for (int t = 0; t <= ticks; ++t) {
      const double fx = xr.lo + (xr.hi - xr.lo) * t / ticks;
      const double fy = yr.lo + (yr.hi - yr.lo) * t / ticks;
      const double vx = spec.x_scale == AxisScale::log ? std::pow(10.0, fx) : fx;
      const double vy = spec.y_scale == AxisScale::log ? std::pow(10.0, fy) : fy;
      svg << "<line x1=\"" << detail::fmt(sx(fx)) << "\" y1=\"" << detail::fmt(y0 + ph) << "\" x2=\"" << detail::fmt(sx(fx))
          << "\" y2=\"" << detail::fmt(y0 + ph + 4) << "\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << detail::fmt(sx(fx)) << "\" y=\"" << detail::fmt(y0 + ph + 16)
          << "\" text-anchor=\"middle\">" << detail::tick_label(vx) << "</text>\n";
      svg << "<line x1=\"" << detail::fmt(x0 - 4) << "\" y1=\"" << detail::fmt(sy(fy)) << "\" x2=\"" << detail::fmt(x0)
          << "\" y2=\"" << detail::fmt(sy(fy)) << "\" stroke=\"black\"/>\n";
      svg << "<text x=\"" << detail::fmt(x0 - 6) << "\" y=\"" << detail::fmt(sy(fy) + 4)
          << "\" text-anchor=\"end\">" << detail::tick_label(vy) << "</text>\n";
    }
    const auto& first = panel.series.front();
    svg << "<text x=\"" << detail::fmt(x0 + pw / 2.0) << "\" y=\"" << detail::fmt(y0 + ph + 34)
        << "\" text-anchor=\"middle\">" << detail::xml_escape(first.x_column) << "</text>\n";

    for (std::size_t s = 0; s < loaded.size(); ++s) {
      const char* color = detail::kPalette[s % std::size(detail::kPalette)];
      svg << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
      for (std::size_t i = 0; i < loaded[s].xs.size(); ++i)
        svg << (i ? " " : "") << detail::fmt(sx(loaded[s].xs[i])) << ',' << detail::fmt(sy(loaded[s].ys[i]));
      svg << "\"/>\n";
      const double ly = y0 + 14 + 14.0 * static_cast<double>(s);
      svg << "<line x1=\"" << detail::fmt(x0 + pw - 110) << "\" y1=\"" << detail::fmt(ly - 4) << "\" x2=\""
          << detail::fmt(x0 + pw - 92) << "\" y2=\"" << detail::fmt(ly - 4) << "\" stroke=\"" << color << "\"/>\n";
      svg << "<text x=\"" << detail::fmt(x0 + pw - 88) << "\" y=\"" << detail::fmt(ly) << "\">"
          << detail::xml_escape(loaded[s].name) << "</text>\n";
    }
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

/// {"title", "output", "x_scale", "y_scale",
///  "panels": [{"title", "series": [{"name", "csv", "x", "y"}]}]}
/// Relative CSV paths resolve against `base`.
inline PlotSpec plot_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  auto scale = [](const std::string& s) {
    if (s == "linear") return AxisScale::linear;
    if (s == "log") return AxisScale::log;
    throw ConfigError("plot: unknown axis scale '" + s + "'");
  };
  PlotSpec spec;
  try {
    spec.title = j.value("title", "");
    spec.output = j.value("output", "plot.svg");
    if (spec.output.is_relative() && !base.empty()) spec.output = base / spec.output;
    spec.x_scale = scale(j.value("x_scale", "linear"));
    spec.y_scale = scale(j.value("y_scale", "linear"));
    for (const auto& pj : j.value("panels", nlohmann::json::array())) {
      PlotPanel panel;
      panel.title = pj.value("title", "");
      for (const auto& sj : pj.value("series", nlohmann::json::array())) {
        std::filesystem::path csv = sj.at("csv").get<std::string>();
        if (csv.is_relative() && !base.empty()) csv = base / csv;
        panel.series.push_back({sj.value("name", ""), csv, sj.at("x").get<std::string>(), sj.at("y").get<std::string>()});
      }
      spec.panels.push_back(std::move(panel));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("plot spec: ") + e.what());
  }
  return spec;
}

inline void write_svg(const PlotSpec& spec) {
  const auto text = render_svg(spec);
  std::ofstream out(spec.output);
  if (!out) throw IoError("cannot write " + spec.output.string());
  out << text;
}

}  // namespace groklens
