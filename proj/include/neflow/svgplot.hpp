// Copyright 2026 The neflow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "neflow/experiment.hpp"

namespace neflow {

// Minimal dependency-free line plots, enough to eyeball a run: linear or
// log-scale y, shared time axis, legend. Not a general plotting layer.
struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

namespace detail {

inline const char* plot_color(size_t i) {
  static const char* kPalette[] = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

inline std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

inline std::string fmt_px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace detail

inline void write_line_svg(std::ostream& os, const std::string& title,
                           const std::string& x_label,
                           const std::string& y_label,
                           std::vector<PlotSeries> series, bool log_y) {
  constexpr double kW = 860, kH = 520;
  constexpr double kL = 72, kR = 180, kT = 44, kB = 52;
  constexpr double kFloor = 1e-16;  // log-scale floor for zero samples
  constexpr size_t kMaxPoints = 2000;

  // Drop empty series; on log scale, floor nonpositive samples.
  series.erase(std::remove_if(series.begin(), series.end(),
                              [](const PlotSeries& s) { return s.y.empty(); }),
               series.end());
  double x_min = 0, x_max = 1, y_min = log_y ? kFloor : 0, y_max = 1;
  bool first = true;
  for (PlotSeries& s : series) {
    for (size_t k = 0; k < s.y.size(); ++k) {
      double yv = s.y[k];
      if (log_y) yv = std::max(yv, kFloor);
      if (!std::isfinite(yv)) continue;
      if (first) {
        x_min = x_max = s.x[k];
        y_min = y_max = yv;
        first = false;
      } else {
        x_min = std::min(x_min, s.x[k]);
        x_max = std::max(x_max, s.x[k]);
        y_min = std::min(y_min, yv);
        y_max = std::max(y_max, yv);
      }
    }
  }
  if (x_max <= x_min) x_max = x_min + 1;
  if (log_y) {
    y_min = std::max(y_min, kFloor);
    y_max = std::max(y_max, y_min * 10);
  } else if (y_max <= y_min) {
    y_max = y_min + 1;
  }
  const double ly_min = log_y ? std::log10(y_min) : y_min;
  const double ly_max = log_y ? std::log10(y_max) : y_max;
  const auto px = [&](double x) {
    return kL + (x - x_min) / (x_max - x_min) * (kW - kL - kR);
  };
  const auto py = [&](double y) {
    const double v = log_y ? std::log10(std::max(y, kFloor)) : y;
    return kH - kB - (v - ly_min) / (ly_max - ly_min) * (kH - kT - kB);
  };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH
     << "\">\n";
  os << "<rect width=\"" << kW << "\" height=\"" << kH
     << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << (kL + (kW - kL - kR) / 2) << "\" y=\"24\" "
     << "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
     << title << "</text>\n";

  // Grid and ticks.
  const int n_xticks = 6;
  for (int k = 0; k <= n_xticks; ++k) {
    const double xv = x_min + (x_max - x_min) * k / n_xticks;
    const double X = px(xv);
    os << "<line x1=\"" << detail::fmt_px(X) << "\" y1=\"" << kT
       << "\" x2=\"" << detail::fmt_px(X) << "\" y2=\"" << (kH - kB)
       << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << detail::fmt_px(X) << "\" y=\"" << (kH - kB + 18)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"11\">" << detail::fmt_tick(xv) << "</text>\n";
  }
  if (log_y) {
    const int d_lo = static_cast<int>(std::ceil(ly_min - 1e-9));
    const int d_hi = static_cast<int>(std::floor(ly_max + 1e-9));
    const int stride = std::max(1, (d_hi - d_lo) / 8);
    for (int d = d_lo; d <= d_hi; d += stride) {
      const double Y = py(std::pow(10.0, d));
      os << "<line x1=\"" << kL << "\" y1=\"" << detail::fmt_px(Y)
         << "\" x2=\"" << (kW - kR) << "\" y2=\"" << detail::fmt_px(Y)
         << "\" stroke=\"#e0e0e0\"/>\n";
      os << "<text x=\"" << (kL - 6) << "\" y=\"" << detail::fmt_px(Y + 4)
         << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
         << "font-size=\"11\">1e" << d << "</text>\n";
    }
  } else {
    const int n_yticks = 6;
    for (int k = 0; k <= n_yticks; ++k) {
      const double yv = y_min + (y_max - y_min) * k / n_yticks;
      const double Y = py(yv);
      os << "<line x1=\"" << kL << "\" y1=\"" << detail::fmt_px(Y)
         << "\" x2=\"" << (kW - kR) << "\" y2=\"" << detail::fmt_px(Y)
         << "\" stroke=\"#e0e0e0\"/>\n";
      os << "<text x=\"" << (kL - 6) << "\" y=\"" << detail::fmt_px(Y + 4)
         << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
         << "font-size=\"11\">" << detail::fmt_tick(yv) << "</text>\n";
    }
  }
  os << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\""
     << (kW - kL - kR) << "\" height=\"" << (kH - kT - kB)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (kL + (kW - kL - kR) / 2) << "\" y=\"" << (kH - 14)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"13\">" << x_label << "</text>\n";
  os << "<text x=\"20\" y=\"" << (kT + (kH - kT - kB) / 2)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
     << "font-size=\"13\" transform=\"rotate(-90 20 "
     << (kT + (kH - kT - kB) / 2) << ")\">" << y_label << "</text>\n";

  // Series polylines, decimated to a sane point budget.
  for (size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    const size_t stride = std::max<size_t>(1, s.y.size() / kMaxPoints);
    os << "<polyline fill=\"none\" stroke=\"" << detail::plot_color(si)
       << "\" stroke-width=\"1.4\" points=\"";
    for (size_t k = 0; k < s.y.size(); k += stride) {
      os << detail::fmt_px(px(s.x[k])) << ',' << detail::fmt_px(py(s.y[k]))
         << ' ';
    }
    if ((s.y.size() - 1) % stride != 0) {
      os << detail::fmt_px(px(s.x.back())) << ','
         << detail::fmt_px(py(s.y.back()));
    }
    os << "\"/>\n";
  }

  // Legend in the right margin.
  for (size_t si = 0; si < series.size(); ++si) {
    const double Y = kT + 14 + 18 * static_cast<double>(si);
    if (Y > kH - kB) break;
    os << "<line x1=\"" << (kW - kR + 10) << "\" y1=\"" << Y << "\" x2=\""
       << (kW - kR + 34) << "\" y2=\"" << Y << "\" stroke=\""
       << detail::plot_color(si) << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << (kW - kR + 40) << "\" y=\"" << (Y + 4)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[si].label
       << "</text>\n";
  }
  os << "</svg>\n";
}

// Per-agent action components against time.
inline void plot_actions(std::ostream& os, const StateLayout& layout,
                         const Trajectory& traj) {
  std::vector<PlotSeries> series;
  for (int i = 0; i < layout.players(); ++i) {
    const auto& a = layout.agents[static_cast<size_t>(i)];
    for (int k = 0; k < a.n; ++k) {
      PlotSeries s;
      s.label = "agent " + std::to_string(i) +
                (a.n > 1 ? "[" + std::to_string(k) + "]" : "");
      s.x = traj.times;
      s.y.reserve(traj.states.size());
      for (const Eigen::VectorXd& y : traj.states) {
        s.y.push_back(layout.x(y, i)(k));
      }
      series.push_back(std::move(s));
    }
  }
  write_line_svg(os, "actions", "t", "x_i(t)", std::move(series),
                 /*log_y=*/false);
}

// Distance to equilibrium plus consensus / observer diagnostics, log scale.
inline void plot_metrics(std::ostream& os, const Trajectory& traj) {
  const auto nonzero = [](const std::vector<double>& v) {
    for (double e : v) {
      if (e != 0.0) return true;
    }
    return false;
  };
  std::vector<PlotSeries> series;
  series.push_back({"|x - x*|", traj.times, traj.ne_error});
  if (nonzero(traj.consensus_error)) {
    series.push_back({"consensus error", traj.times, traj.consensus_error});
  }
  if (nonzero(traj.velocity_norm)) {
    series.push_back({"velocity norm", traj.times, traj.velocity_norm});
  }
  if (nonzero(traj.observer_norm)) {
    series.push_back({"observer error", traj.times, traj.observer_norm});
  }
  write_line_svg(os, "convergence metrics", "t", "norm", std::move(series),
                 /*log_y=*/true);
}

}  // namespace neflow
