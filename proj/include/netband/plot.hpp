#pragma once

// Static SVG line charts built from the CSV files only: mean cumulative
// regret per policy with a shaded +-1 std band.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "csv.hpp"

namespace netband {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> std;
};

struct PlotData {
  std::string x_label;
  std::string y_label = "cumulative regret";
  /// Category names when the x axis is not numeric (sweeps over policies).
  std::vector<std::string> categories;
  std::vector<PlotSeries> series;  // in order of first appearance
};

namespace detail {

inline std::size_t series_slot(std::vector<PlotSeries>& series, const std::string& name) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].name == name) return i;
  }
  series.push_back({name, {}, {}, {}});
  return series.size() - 1;
}

inline PlotData trace_plot(const CsvTable& t) {
  // policy -> run_id -> (t, cum) in file order
  struct Run {
    std::string id;
    std::vector<double> t, cum;
    std::size_t first_line = 0;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Run>> runs;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    auto& list = runs[row[1]];
    if (list.empty()) order.push_back(row[1]);
    if (list.empty() || list.back().id != row[0]) list.push_back({row[0], {}, {}, t.lines[i]});
    list.back().t.push_back(parse_number(row[8], t.lines[i], "t"));
    list.back().cum.push_back(parse_number(row[10], t.lines[i], "cum_regret"));
  }
  PlotData data;
  data.x_label = "round t";
  for (const auto& name : order) {
    const auto& list = runs[name];
    PlotSeries s{name, list.front().t, {}, {}};
    for (const auto& r : list) {
      if (r.t != s.x) throw CsvError(r.first_line, "run " + r.id + " of " + name + " has a different round grid");
    }
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      std::vector<double> col;
      for (const auto& r : list) col.push_back(r.cum[k]);
      const auto [m, sd] = mean_and_std(col);
      s.mean.push_back(m);
      s.std.push_back(sd);
    }
    data.series.push_back(std::move(s));
  }
  return data;
}

inline PlotData sweep_plot(const CsvTable& t) {
  PlotData data;
  bool numeric = true;
  for (const auto& row : t.rows) {
    char* end = nullptr;
    std::strtod(row[0].c_str(), &end);
    if (end != row[0].c_str() + row[0].size()) numeric = false;
  }
  data.x_label = numeric ? "sweep value" : "policy";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    double x = 0.0;
    if (numeric) {
      x = parse_number(row[0], t.lines[i], "axis_value");
    } else {
      auto it = std::find(data.categories.begin(), data.categories.end(), row[0]);
      if (it == data.categories.end()) it = data.categories.insert(it, row[0]);
      x = static_cast<double>(it - data.categories.begin());
    }
    auto& s = data.series[series_slot(data.series, row[1])];
    s.x.push_back(x);
    s.mean.push_back(parse_number(row[2], t.lines[i], "mean_final_regret"));
    s.std.push_back(parse_number(row[3], t.lines[i], "std_final_regret"));
  }
  data.y_label = "final cumulative regret";
  return data;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
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

}  // namespace detail

inline PlotData plot_data(const CsvTable& table) {
  return table.kind == CsvTable::Kind::trace ? detail::trace_plot(table) : detail::sweep_plot(table);
}

inline std::string render_svg(const PlotData& data) {
  using detail::fmt;
  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                            "#e377c2", "#7f7f7f"};
  const double width = 720, height = 450, left = 70, right = 170, top = 20, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y1 = 0.0;
  for (const auto& s : data.series) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      x0 = std::min(x0, s.x[k]);
      x1 = std::max(x1, s.x[k]);
      y1 = std::max(y1, s.mean[k] + s.std[k]);
    }
  }
  if (!std::isfinite(x0)) throw std::invalid_argument("nothing to plot");
  if (x1 == x0) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (!(y1 > 0.0)) y1 = 1.0;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + ph - std::max(0.0, y) / y1 * ph; };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

  // axes and ticks
  o << "<g stroke=\"black\" stroke-width=\"1\">\n"
    << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(left + pw) << "\" y2=\""
    << fmt(top + ph) << "\"/>\n"
    << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(left) << "\" y2=\"" << fmt(top + ph)
    << "\"/>\n</g>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = y1 * i / 4.0;
    o << "<line x1=\"" << fmt(left - 4) << "\" y1=\"" << fmt(py(yv)) << "\" x2=\"" << fmt(left) << "\" y2=\""
      << fmt(py(yv)) << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\">"
      << detail::tick_label(yv) << "</text>\n";
  }
  if (!data.categories.empty()) {
    for (std::size_t i = 0; i < data.categories.size(); ++i) {
      const double xv = px(static_cast<double>(i));
      o << "<text x=\"" << fmt(xv) << "\" y=\"" << fmt(top + ph + 16) << "\" text-anchor=\"middle\">"
        << detail::xml_escape(data.categories[i]) << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 4; ++i) {
      const double xv = x0 + (x1 - x0) * i / 4.0;
      o << "<line x1=\"" << fmt(px(xv)) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(px(xv)) << "\" y2=\""
        << fmt(top + ph + 4) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << fmt(top + ph + 16) << "\" text-anchor=\"middle\">"
        << detail::tick_label(xv) << "</text>\n";
    }
  }
  o << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(height - 10) << "\" text-anchor=\"middle\">"
    << detail::xml_escape(data.x_label) << "</text>\n"
    << "<text x=\"16\" y=\"" << fmt(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << fmt(top + ph / 2) << ")\">" << detail::xml_escape(data.y_label) << "</text>\n</g>\n";

  // bands first so every line stays visible
  for (std::size_t i = 0; i < data.series.size(); ++i) {
    const auto& s = data.series[i];
    const char* color = palette[i % std::size(palette)];
    o << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) o << (k ? " " : "") << fmt(px(s.x[k])) << ',' << fmt(py(s.mean[k] + s.std[k]));
    for (std::size_t k = s.x.size(); k-- > 0;) o << ' ' << fmt(px(s.x[k])) << ',' << fmt(py(s.mean[k] - s.std[k]));
    o << "\"/>\n";
  }
  for (std::size_t i = 0; i < data.series.size(); ++i) {
    const auto& s = data.series[i];
    const char* color = palette[i % std::size(palette)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) o << (k ? " " : "") << fmt(px(s.x[k])) << ',' << fmt(py(s.mean[k]));
    o << "\"/>\n";
    if (s.x.size() <= 20) {
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        o << "<circle cx=\"" << fmt(px(s.x[k])) << "\" cy=\"" << fmt(py(s.mean[k])) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
      }
    }
  }

  // legend
  o << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < data.series.size(); ++i) {
    const double ly = top + 10 + 20.0 * static_cast<double>(i);
    const char* color = palette[i % std::size(palette)];
    o << "<rect x=\"" << fmt(left + pw + 15) << "\" y=\"" << fmt(ly - 8) << "\" width=\"14\" height=\"10\" fill=\""
      << color << "\"/>\n"
      << "<text x=\"" << fmt(left + pw + 35) << "\" y=\"" << fmt(ly + 1) << "\">"
      << detail::xml_escape(data.series[i].name) << "</text>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

}  // namespace netband
