#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "regnav/sim/eventlog.hpp"

// Downtrack distance over time as a standalone SVG, with event markers drawn
// as vertical lines at their timestamps.

namespace regnav::sim {

class PlotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlotOptions {
  double width = 800.0;
  double height = 480.0;
  double margin = 56.0;
};

struct Marker {
  double t = 0.0;
  std::string kind;   // css class suffix
  std::string color;
  bool dashed = true;
  std::string label;
};

/// Markers worth drawing, taken from the log's event rows.
inline std::vector<Marker> plot_markers(const EventLog& log) {
  std::vector<Marker> out;
  for (const auto& r : log.rows) {
    if (r.record != "event") continue;
    const auto k = r.kind();
    if (k == "decel_onset") {
      out.push_back({r.t, "decel-onset", "#d62728", false, "decel"});
    } else if (k == "zone_enter" || k == "zone_exit") {
      out.push_back({r.t, "zone", "#e6b800", true, k == "zone_enter" ? "zone in" : "zone out"});
    } else if (k == "line_cross") {
      out.push_back({r.t, "stop-line", "#555555", true, "line"});
    } else if (k == "stop_begin") {
      out.push_back({r.t, "stop", "#8c8c8c", true, "stop"});
    } else if (k == "transition") {
      const auto from = r.info.value("from", std::string{}), to = r.info.value("to", std::string{});
      const bool into = to.rfind("Overtaking/", 0) == 0, outof = from.rfind("Overtaking/", 0) == 0;
      if (into && !outof) out.push_back({r.t, "overtake", "#1f77b4", true, "overtake"});
      if (outof && !into) out.push_back({r.t, "overtake", "#1f77b4", true, "back"});
      if (to.rfind("EmergencyStop/", 0) == 0) out.push_back({r.t, "emergency", "#9467bd", true, "emergency"});
    }
  }
  return out;
}

inline std::string render_station_plot(const EventLog& log, const PlotOptions& opt = {}) {
  std::vector<const LogRow*> ego = log.select("ego");
  if (ego.empty()) throw PlotError("log has no ego samples to plot");

  double t0 = ego.front()->t, t1 = ego.back()->t;
  double s0 = ego.front()->station, s1 = s0;
  for (const auto* r : ego) {
    s0 = std::min(s0, r->station);
    s1 = std::max(s1, r->station);
  }
  if (t1 - t0 < 1e-9) t1 = t0 + 1.0;
  if (s1 - s0 < 1e-9) s1 = s0 + 1.0;

  const double x0 = opt.margin, x1 = opt.width - opt.margin * 0.5;
  const double y0 = opt.height - opt.margin, y1 = opt.margin * 0.5;
  const auto px = [&](double t) { return x0 + (t - t0) / (t1 - t0) * (x1 - x0); };
  const auto py = [&](double s) { return y0 + (s - s0) / (s1 - s0) * (y1 - y0); };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      opt.width, opt.height);
  svg += fmt::format("<title>{} {} seed {}</title>\n", log.scenario, log.variant, log.seed);

  // Axes with a handful of ticks.
  svg += fmt::format(
      "<g class=\"axes\" stroke=\"black\" fill=\"none\"><line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" "
      "y2=\"{1:.2f}\"/><line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{3:.2f}\"/></g>\n",
      x0, y0, x1, y1);
  svg += "<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double t = t0 + (t1 - t0) * i / 5.0, s = s0 + (s1 - s0) * i / 5.0;
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.1f}</text>\n", px(t),
                       y0 + 16, t);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.0f}</text>\n", x0 - 6,
                       py(s) + 4, s);
  }
  svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">time (s)</text>\n",
                     0.5 * (x0 + x1), opt.height - 12);
  svg += fmt::format(
      "<text transform=\"translate(14 {:.2f}) rotate(-90)\" text-anchor=\"middle\">station (m)</text>\n",
      0.5 * (y0 + y1));
  svg += "</g>\n";

  svg += "<polyline class=\"station\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < ego.size(); ++i) {
    svg += fmt::format("{}{:.3f},{:.3f}", i ? " " : "", px(ego[i]->t), py(ego[i]->station));
  }
  svg += "\"/>\n";

  for (const auto& m : plot_markers(log)) {
    const double x = px(std::clamp(m.t, t0, t1));
    svg += fmt::format(
        "<g class=\"marker {}\"><line x1=\"{:.3f}\" y1=\"{:.2f}\" x2=\"{:.3f}\" y2=\"{:.2f}\" stroke=\"{}\"{}/>"
        "<text x=\"{:.3f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"{}\">{}</text></g>\n",
        m.kind, x, y0, x, y1, m.color, m.dashed ? " stroke-dasharray=\"6 4\"" : "", x + 3, y1 + 10, m.color,
        m.label);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace regnav::sim
