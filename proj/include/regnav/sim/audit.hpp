#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regnav/geom.hpp"
#include "regnav/regdb.hpp"
#include "regnav/sim/eventlog.hpp"
#include "regnav/units.hpp"

// Post-hoc compliance audit. Works only from the event log, the regulation
// records and the static map; nothing here reaches into the planner.

namespace regnav::sim {

struct AuditParams {
  double stopped_speed_mps = 0.1;
  double stop_window_m = 1.0;        // stop must happen within this far before the line
  double turn_curvature = 0.02;      // commanded |curvature| that counts as turn steering
  double junction_reach_m = 10.0;    // turn steering is only looked for this close to a line
  double pass_behind_m = 10.0;       // original lane counts as clear once actors are this far back
  double pass_ahead_m = 60.0;
  double return_grace_s = 5.0;       // time allowed to merge back once the lane is clear
};

struct Interval {
  double start = 0.0;
  double end = 0.0;
};

inline constexpr double kNoMargin = std::numeric_limits<double>::quiet_NaN();

struct Finding {
  std::string code_id;
  std::string check;  // short name of what was measured
  bool satisfied = true;
  bool no_data = true;
  double margin = kNoMargin;
  std::string unit;
  std::vector<Interval> violations;
};

struct ComplianceReport {
  std::vector<Finding> findings;

  bool all_satisfied() const {
    return std::all_of(findings.begin(), findings.end(), [](const Finding& f) { return f.satisfied; });
  }
  const Finding* find(std::string_view code_id) const {
    for (const auto& f : findings) {
      if (f.code_id == code_id) return &f;
    }
    return nullptr;
  }
};

inline nlohmann::json to_json(const ComplianceReport& r) {
  nlohmann::json out = {{"all_satisfied", r.all_satisfied()}, {"findings", nlohmann::json::array()}};
  for (const auto& f : r.findings) {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& i : f.violations) v.push_back({i.start, i.end});
    out["findings"].push_back({{"code_id", f.code_id},
                               {"check", f.check},
                               {"satisfied", f.satisfied},
                               {"no_data", f.no_data},
                               {"margin", std::isnan(f.margin) ? nlohmann::json() : nlohmann::json(f.margin)},
                               {"unit", f.unit},
                               {"violations", v}});
  }
  return out;
}

namespace detail {

inline bool has_keyword(const regdb::RegulationRecord& r, std::string_view k) {
  return std::find(r.condition_keywords.begin(), r.condition_keywords.end(), k) !=
         r.condition_keywords.end();
}

inline double polyline_distance(const std::vector<geom::Point2>& line, geom::Point2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const geom::Point2 a = line[i], ab = line[i + 1] - a;
    const double len2 = geom::dot(ab, ab);
    const double u = len2 > 0.0 ? std::clamp(geom::dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    best = std::min(best, geom::distance(p, a + ab * u));
  }
  if (line.size() == 1) best = geom::distance(p, line[0]);
  return best;
}

inline const geom::RoadSegment* nearest_segment(const geom::VectorMap& map, geom::Point2 p) {
  const geom::RoadSegment* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& s : map.segments) {
    const double d = polyline_distance(s.centerline, p);
    if (d < best_d) {
      best_d = d;
      best = &s;
    }
  }
  return best;
}

/// The segment whose left neighbour is `seg`, if any.
inline const geom::RoadSegment* right_of(const geom::VectorMap& map, const geom::RoadSegment& seg) {
  for (const auto& s : map.segments) {
    if (s.left_neighbor && *s.left_neighbor == seg.id) return &s;
  }
  return nullptr;
}

/// Joins flagged samples into intervals over the sample times.
class IntervalBuilder {
 public:
  void add(double t, bool bad) {
    if (bad) {
      if (!open_) out_.push_back({t, t});
      out_.back().end = t;
    }
    open_ = bad;
  }
  std::vector<Interval> done() { return std::move(out_); }

 private:
  bool open_ = false;
  std::vector<Interval> out_;
};

struct Timeline {
  std::vector<const LogRow*> ego;
  std::map<double, std::vector<const LogRow*>> actors_at;  // keyed by sample time
  std::vector<const LogRow*> signals;                       // in log order
};

inline Timeline timeline(const EventLog& log) {
  Timeline tl;
  for (const auto& r : log.rows) {
    if (r.record == "ego") tl.ego.push_back(&r);
    if (r.record == "actor") tl.actors_at[r.t].push_back(&r);
    if (r.record == "signal") tl.signals.push_back(&r);
  }
  return tl;
}

/// Light shown at time t by the signal standing at `station`, if any.
inline std::optional<std::string> light_at(const Timeline& tl, double station, double t) {
  std::optional<std::string> light;
  for (const auto* r : tl.signals) {
    if (std::abs(r->station - station) > 0.5 || r->t > t + 1e-9) continue;
    light = r->info.value("light", std::string{});
  }
  return light;
}

inline Finding clearance_finding(const regdb::RegulationRecord& rec, const Timeline& tl) {
  Finding f{rec.code_id, "cyclist clearance", true, true, kNoMargin, "m", {}};
  const double need = *rec.numeric("min_clearance");
  IntervalBuilder iv;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto* e : tl.ego) {
    bool bad = false;
    if (const auto it = tl.actors_at.find(e->t); it != tl.actors_at.end()) {
      for (const auto* a : it->second) {
        if (a->kind() != "cyclist") continue;
        if (std::abs(a->station - e->station) >= 0.5 * (a->length + e->length)) continue;
        const double gap = std::abs(a->lateral - e->lateral) - 0.5 * (a->width + e->width);
        worst = std::min(worst, gap);
        f.no_data = false;
        bad = bad || gap < need;
      }
    }
    iv.add(e->t, bad);
  }
  f.violations = iv.done();
  if (!f.no_data) f.margin = worst - need;
  return f;
}

struct LineVisit {
  double station = 0.0;
  std::optional<double> cross_t;   // ego centre passes the line
  std::optional<double> turn_t;    // first turn steering near the line
  double best_stop_s = 0.0;        // longest qualifying stop before both
};

inline LineVisit visit_line(double line, const Timeline& tl, const AuditParams& p) {
  LineVisit v;
  v.station = line;
  double run_start = -1.0;
  for (std::size_t i = 0; i < tl.ego.size(); ++i) {
    const auto* e = tl.ego[i];
    if (!v.turn_t && e->station >= line - p.junction_reach_m && e->speed > 0.0 &&
        std::abs(e->curvature) >= p.turn_curvature) {
      v.turn_t = e->t;
    }
    if (!v.cross_t && i > 0 && tl.ego[i - 1]->station <= line && e->station > line) v.cross_t = e->t;
    if (v.cross_t || v.turn_t) break;
    const bool stopped = e->speed < p.stopped_speed_mps && e->station <= line &&
                         e->station >= line - p.stop_window_m;
    if (stopped) {
      if (run_start < 0.0) run_start = e->t;
      // Stop duration counts through the end of this sample.
      const double dt = i + 1 < tl.ego.size() ? tl.ego[i + 1]->t - e->t : 0.0;
      v.best_stop_s = std::max(v.best_stop_s, e->t + dt - run_start);
    } else {
      run_start = -1.0;
    }
  }
  return v;
}

inline std::vector<double> stop_lines(const EventLog& log) {
  std::vector<double> out;
  for (const auto* r : log.select("stop_line")) out.push_back(r->station);
  return out;
}

inline bool sign_at(const EventLog& log, std::string_view kind, double station) {
  for (const auto* r : log.select("sign")) {
    if (r->kind() == kind && std::abs(r->station - station) <= 1.0) return true;
  }
  return false;
}

/// Stop before entering or turning at a line, when the line has a red light
/// (or stop sign) at the moment the ego leaves it.
inline Finding stop_finding(const regdb::RegulationRecord& rec, const EventLog& log,
                            const Timeline& tl, const AuditParams& p, bool for_stop_sign) {
  Finding f{rec.code_id, for_stop_sign ? "stop at stop sign" : "stop on red before turning",
            true, true, kNoMargin, "s", {}};
  const double need = rec.numeric("min_stop_time").value_or(0.0);
  double worst = std::numeric_limits<double>::infinity();
  for (double line : stop_lines(log)) {
    const auto v = visit_line(line, tl, p);
    const auto leave = std::min(v.cross_t.value_or(1e300), v.turn_t.value_or(1e300));
    if (leave == 1e300) continue;
    bool applies;
    if (for_stop_sign) {
      applies = sign_at(log, "stop", line);
    } else {
      applies = light_at(tl, line, leave) == std::string("red");
    }
    if (!applies) continue;
    f.no_data = false;
    worst = std::min(worst, v.best_stop_s - need);
    if (v.best_stop_s + 1e-9 < need) f.violations.push_back({leave, leave});
  }
  if (!f.no_data) f.margin = worst;
  return f;
}

/// No turn while the light is red where a sign forbids turning on red.
inline Finding no_turn_on_red_finding(const regdb::RegulationRecord& rec, const EventLog& log,
                                      const Timeline& tl, const AuditParams& p) {
  Finding f{rec.code_id, "no turn on red", true, true, kNoMargin, "s", {}};
  double worst = std::numeric_limits<double>::infinity();
  for (double line : stop_lines(log)) {
    if (!sign_at(log, "no_turn_on_red", line)) continue;
    const auto v = visit_line(line, tl, p);
    if (!v.turn_t) continue;
    f.no_data = false;
    if (light_at(tl, line, *v.turn_t) == std::string("red")) {
      f.violations.push_back({*v.turn_t, *v.turn_t});
      worst = std::min(worst, 0.0);
      continue;
    }
    // Margin: how long after the light left red the turn began.
    double last_red = -std::numeric_limits<double>::infinity();
    for (const auto* r : tl.signals) {
      if (std::abs(r->station - line) <= 0.5 && r->t <= *v.turn_t &&
          r->info.value("light", std::string{}) != "red") {
        if (light_at(tl, line, r->t - 1e-6) == std::string("red")) last_red = r->t;
      }
    }
    worst = std::min(worst, std::isfinite(last_red) ? *v.turn_t - last_red : *v.turn_t - tl.ego.front()->t);
  }
  if (!f.no_data) f.margin = worst;
  return f;
}

inline Finding zone_speed_finding(const regdb::RegulationRecord& rec, const EventLog& log,
                                  const Timeline& tl) {
  Finding f{rec.code_id, "school zone speed", true, true, kNoMargin, "mph", {}};
  const double limit = *rec.numeric("max_speed");
  const auto zones = log.select("zone");
  IntervalBuilder iv;
  double fastest = -std::numeric_limits<double>::infinity();
  for (const auto* e : tl.ego) {
    bool inside = false;
    for (const auto* z : zones) {
      if (z->info.value("kind", std::string{}) != "school_zone") continue;
      inside = inside || (e->station >= z->station && e->station <= z->station + z->length);
    }
    const double mph = mps_to_mph(e->speed);
    if (inside) {
      f.no_data = false;
      fastest = std::max(fastest, mph);
    }
    iv.add(e->t, inside && mph > limit);
  }
  f.violations = iv.done();
  if (!f.no_data) f.margin = limit - fastest;
  return f;
}

inline Finding road_speed_finding(const regdb::RegulationRecord& rec, const Timeline& tl,
                                  const geom::VectorMap& map) {
  Finding f{rec.code_id, "road type speed", true, true, kNoMargin, "mph", {}};
  const double limit = *rec.numeric("max_speed");
  IntervalBuilder iv;
  double fastest = -std::numeric_limits<double>::infinity();
  for (const auto* e : tl.ego) {
    const auto* seg = nearest_segment(map, {e->x, e->y});
    const bool covered = seg && seg->road_type == *rec.road_type;
    const double mph = mps_to_mph(e->speed);
    if (covered) {
      f.no_data = false;
      fastest = std::max(fastest, mph);
    }
    iv.add(e->t, covered && mph > limit);
  }
  f.violations = iv.done();
  if (!f.no_data) f.margin = limit - fastest;
  return f;
}

/// Driving in a left neighbour lane reached across a solid marking.
inline Finding solid_marking_finding(const regdb::RegulationRecord& rec, const Timeline& tl,
                                     const geom::VectorMap& map) {
  Finding f{rec.code_id, "solid marking", true, true, kNoMargin, "s", {}};
  IntervalBuilder iv;
  double left_time = 0.0;
  for (std::size_t i = 0; i < tl.ego.size(); ++i) {
    const auto* e = tl.ego[i];
    const auto* seg = nearest_segment(map, {e->x, e->y});
    const auto* right = seg ? right_of(map, *seg) : nullptr;
    const auto* here_right = seg && seg->left_neighbor ? seg : right;
    if (here_right && here_right->left_marking == geom::MarkingStyle::Solid) f.no_data = false;
    const bool bad = right && right->left_marking == geom::MarkingStyle::Solid;
    if (bad && i + 1 < tl.ego.size()) left_time += tl.ego[i + 1]->t - e->t;
    iv.add(e->t, bad);
  }
  f.violations = iv.done();
  if (!f.no_data) f.margin = left_time > 0.0 ? -left_time : 0.0;
  return f;
}

/// Staying in the left lane once the original lane is clear again.
inline Finding keep_right_finding(const regdb::RegulationRecord& rec, const Timeline& tl,
                                  const geom::VectorMap& map, const AuditParams& p) {
  Finding f{rec.code_id, "return to original lane", true, true, kNoMargin, "s", {}};
  double since = -1.0, longest = 0.0;
  for (const auto* e : tl.ego) {
    const auto* seg = nearest_segment(map, {e->x, e->y});
    const auto* right = seg ? right_of(map, *seg) : nullptr;
    bool lingering = false;
    if (right) {
      f.no_data = false;
      bool clear = true;
      if (const auto it = tl.actors_at.find(e->t); it != tl.actors_at.end()) {
        for (const auto* a : it->second) {
          const auto* aseg = nearest_segment(map, {a->x, a->y});
          const double ds = a->station - e->station;
          if (aseg == right && ds >= -p.pass_behind_m && ds <= p.pass_ahead_m) clear = false;
        }
      }
      lingering = clear;
    }
    if (lingering) {
      if (since < 0.0) since = e->t;
      longest = std::max(longest, e->t - since);
      if (e->t - since > p.return_grace_s) {
        if (f.violations.empty() || f.violations.back().end < since) f.violations.push_back({e->t, e->t});
        f.violations.back().end = e->t;
      }
    } else {
      since = -1.0;
    }
  }
  if (!f.no_data) f.margin = p.return_grace_s - longest;
  return f;
}

}  // namespace detail

/// Audits a finished run against every record the auditor knows how to
/// measure. Records with nothing to measure in this log come back satisfied
/// and flagged no_data.
inline ComplianceReport check_compliance(const EventLog& log, const regdb::RegulationDatabase& db,
                                         const geom::VectorMap& map, const AuditParams& p = {}) {
  using namespace detail;
  const Timeline tl = timeline(log);
  ComplianceReport report;
  for (const auto& rec : db.records()) {
    if (rec.legality) continue;
    if (rec.numeric("min_clearance") && has_keyword(rec, "cyclist")) {
      report.findings.push_back(clearance_finding(rec, tl));
    } else if (has_keyword(rec, "no turn on red")) {
      report.findings.push_back(no_turn_on_red_finding(rec, log, tl, p));
    } else if (rec.numeric("min_stop_time") && has_keyword(rec, "red signal")) {
      report.findings.push_back(stop_finding(rec, log, tl, p, false));
    } else if (rec.numeric("min_stop_time") && has_keyword(rec, "stop sign")) {
      report.findings.push_back(stop_finding(rec, log, tl, p, true));
    } else if (rec.numeric("max_speed") && rec.zoned()) {
      report.findings.push_back(zone_speed_finding(rec, log, tl));
    } else if (rec.numeric("max_speed") && rec.road_type) {
      report.findings.push_back(road_speed_finding(rec, tl, map));
    } else if (has_keyword(rec, "solid left lane marking")) {
      report.findings.push_back(solid_marking_finding(rec, tl, map));
    } else if (has_keyword(rec, "right lane clear")) {
      report.findings.push_back(keep_right_finding(rec, tl, map, p));
    }
  }
  for (auto& f : report.findings) {
    f.satisfied = f.violations.empty();
  }
  return report;
}

}  // namespace regnav::sim
