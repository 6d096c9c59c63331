#pragma once

// Plot-ready artifacts: per-TTT heatmap matrices (rows th1, cols th2) as
// CSV plus a standalone SVG rendering with a viridis-style color ramp.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "a5opt/optimizer.hpp"
#include "a5opt/surrogate.hpp"
#include "a5opt/text.hpp"

namespace a5opt {

struct Heatmap {
  std::string title;
  std::vector<int> th1_values;  // row labels
  std::vector<int> th2_values;  // column labels
  std::vector<std::vector<double>> values;  // [row][col]
};

inline std::vector<int> threshold_values(const ThresholdRange& r) {
  std::vector<int> v;
  for (int t = r.min_dbm; t <= r.max_dbm; t += r.step_db) v.push_back(t);
  return v;
}

// Measured heatmap: per-COP mean across seeds from the dataset.
inline Heatmap heatmap_from_dataset(const Dataset& ds, const SweepSpec& spec, Kpi kpi, int ttt) {
  Heatmap h;
  h.title = std::string(kpi_name(kpi)) + " (measured), ttt=" + fmt_int(ttt) + " ms";
  h.th1_values = threshold_values(spec.th1_range);
  h.th2_values = threshold_values(spec.th2_range);
  std::map<std::pair<long long, long long>, std::pair<double, int>> acc;
  for (const DatasetRow& r : ds.rows) {
    if (r.cop.ttt_ms != ttt) continue;
    auto& a = acc[{std::llround(r.cop.th1_dbm), std::llround(r.cop.th2_dbm)}];
    a.first += kpi == Kpi::mean_rsrp ? r.kpi.mean_rsrp_dbm : r.kpi.hosr_pct;
    a.second += 1;
  }
  h.values.assign(h.th1_values.size(), std::vector<double>(h.th2_values.size(), 0.0));
  for (size_t i = 0; i < h.th1_values.size(); ++i)
    for (size_t j = 0; j < h.th2_values.size(); ++j) {
      auto it = acc.find({h.th1_values[i], h.th2_values[j]});
      if (it == acc.end())
        throw std::runtime_error("dataset has no row for ttt=" + fmt_int(ttt) +
                                 ", th1=" + fmt_int(h.th1_values[i]) +
                                 ", th2=" + fmt_int(h.th2_values[j]));
      h.values[i][j] = it->second.first / it->second.second;
    }
  return h;
}

// Predicted heatmap from a surrogate over the grid.
inline Heatmap heatmap_from_model(const TrainedModel& model, const SweepSpec& spec, int ttt) {
  Heatmap h;
  h.title = std::string(kpi_name(model.spec.target)) + " (predicted), ttt=" + fmt_int(ttt) + " ms";
  h.th1_values = threshold_values(spec.th1_range);
  h.th2_values = threshold_values(spec.th2_range);
  h.values.assign(h.th1_values.size(), std::vector<double>(h.th2_values.size(), 0.0));
  for (size_t i = 0; i < h.th1_values.size(); ++i)
    for (size_t j = 0; j < h.th2_values.size(); ++j)
      h.values[i][j] = model.predict({ttt, static_cast<double>(h.th1_values[i]),
                                      static_cast<double>(h.th2_values[j])});
  return h;
}

// Objective surface at fixed TTT (brute-force landscape analog).
inline Heatmap heatmap_from_objective(const Objective& obj, const SweepSpec& spec, int ttt) {
  Heatmap h;
  h.title = "objective (alpha=" + fmt_fixed(obj.alpha, 2) + "), ttt=" + fmt_int(ttt) + " ms";
  h.th1_values = threshold_values(spec.th1_range);
  h.th2_values = threshold_values(spec.th2_range);
  h.values.assign(h.th1_values.size(), std::vector<double>(h.th2_values.size(), 0.0));
  for (size_t i = 0; i < h.th1_values.size(); ++i)
    for (size_t j = 0; j < h.th2_values.size(); ++j)
      h.values[i][j] = obj.value({ttt, static_cast<double>(h.th1_values[i]),
                                  static_cast<double>(h.th2_values[j])});
  return h;
}

inline void write_heatmap_csv(const std::string& path, const Heatmap& h) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write heatmap CSV: " + path);
  out << "th1_dbm";
  for (int t2 : h.th2_values) out << ',' << t2;
  out << '\n';
  for (size_t i = 0; i < h.th1_values.size(); ++i) {
    out << h.th1_values[i];
    for (size_t j = 0; j < h.th2_values.size(); ++j) out << ',' << fmt_fixed(h.values[i][j], 6);
    out << '\n';
  }
}

namespace detail {

// Compact viridis approximation.
inline std::string ramp_color(double t) {
  static const double stops[][3] = {
      {0.267, 0.005, 0.329}, {0.283, 0.141, 0.458}, {0.254, 0.265, 0.530},
      {0.207, 0.372, 0.553}, {0.164, 0.471, 0.558}, {0.128, 0.567, 0.551},
      {0.135, 0.659, 0.518}, {0.267, 0.749, 0.441}, {0.478, 0.821, 0.318},
      {0.741, 0.873, 0.150}, {0.993, 0.906, 0.144}};
  constexpr int n = 11;
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * (n - 1);
  const int lo = std::min(n - 2, static_cast<int>(pos));
  const double f = pos - lo;
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(255.0 * (stops[lo][0] * (1 - f) + stops[lo + 1][0] * f))),
                static_cast<int>(std::lround(255.0 * (stops[lo][1] * (1 - f) + stops[lo + 1][1] * f))),
                static_cast<int>(std::lround(255.0 * (stops[lo][2] * (1 - f) + stops[lo + 1][2] * f))));
  return buf;
}

}  // namespace detail

inline void write_heatmap_svg(const std::string& path, const Heatmap& h) {
  const size_t rows = h.th1_values.size();
  const size_t cols = h.th2_values.size();
  if (rows == 0 || cols == 0) throw std::invalid_argument("empty heatmap");
  double vmin = h.values[0][0], vmax = h.values[0][0];
  for (const auto& r : h.values)
    for (double v : r) {
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  const double span = vmax > vmin ? vmax - vmin : 1.0;

  const int cell = 14;
  const int left = 70, top = 40, right = 90, bottom = 50;
  const int width = left + static_cast<int>(cols) * cell + right;
  const int height = top + static_cast<int>(rows) * cell + bottom;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write heatmap SVG: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << h.title << "</text>\n";
  for (size_t i = 0; i < rows; ++i) {
    for (size_t j = 0; j < cols; ++j) {
      const double t = (h.values[i][j] - vmin) / span;
      out << "<rect x=\"" << left + static_cast<int>(j) * cell << "\" y=\""
          << top + static_cast<int>(i) * cell << "\" width=\"" << cell << "\" height=\"" << cell
          << "\" fill=\"" << detail::ramp_color(t) << "\"/>\n";
    }
  }
  // Axis tick labels, thinned to at most ~8 per axis.
  const size_t row_stride = std::max<size_t>(1, rows / 8);
  for (size_t i = 0; i < rows; i += row_stride)
    out << "<text x=\"" << left - 6 << "\" y=\"" << top + static_cast<int>(i) * cell + cell - 3
        << "\" text-anchor=\"end\">" << h.th1_values[i] << "</text>\n";
  const size_t col_stride = std::max<size_t>(1, cols / 8);
  for (size_t j = 0; j < cols; j += col_stride)
    out << "<text x=\"" << left + static_cast<int>(j) * cell + cell / 2 << "\" y=\""
        << top + static_cast<int>(rows) * cell + 14 << "\" text-anchor=\"middle\">"
        << h.th2_values[j] << "</text>\n";
  out << "<text x=\"" << left - 50 << "\" y=\"" << top + static_cast<int>(rows) * cell / 2
      << "\" transform=\"rotate(-90 " << left - 50 << ' ' << top + static_cast<int>(rows) * cell / 2
      << ")\" text-anchor=\"middle\">th1_dbm</text>\n";
  out << "<text x=\"" << left + static_cast<int>(cols) * cell / 2 << "\" y=\"" << height - 16
      << "\" text-anchor=\"middle\">th2_dbm</text>\n";
  // Color bar.
  const int bar_x = left + static_cast<int>(cols) * cell + 20;
  const int bar_h = static_cast<int>(rows) * cell;
  out << "<defs><linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n";
  for (int k = 0; k <= 10; ++k)
    out << "<stop offset=\"" << k * 10 << "%\" stop-color=\"" << detail::ramp_color(k / 10.0)
        << "\"/>\n";
  out << "</linearGradient></defs>\n";
  out << "<rect x=\"" << bar_x << "\" y=\"" << top << "\" width=\"12\" height=\"" << bar_h
      << "\" fill=\"url(#ramp)\"/>\n";
  out << "<text x=\"" << bar_x + 16 << "\" y=\"" << top + 8 << "\">" << fmt_fixed(vmax, 2)
      << "</text>\n";
  out << "<text x=\"" << bar_x + 16 << "\" y=\"" << top + bar_h << "\">" << fmt_fixed(vmin, 2)
      << "</text>\n";
  out << "</svg>\n";
}

}  // namespace a5opt
