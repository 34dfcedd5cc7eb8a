#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "regnav/cost.hpp"
#include "regnav/fsm.hpp"
#include "regnav/geom.hpp"
#include "regnav/regdb.hpp"
#include "regnav/scene.hpp"
#include "regnav/sim/world.hpp"
#include "regnav/units.hpp"

namespace regnav::sim {

struct PlannerParams {
  cost::CostWeights weights;
  cost::MotionNorms norms;
  double illegal_penalty = 1.0;
  double horizon_s = 6.0;
  double max_accel = 2.0;
  double plan_decel = 2.5;        // braking the profile plans with
  double firm_decel = 5.0;        // ceiling when a stop would otherwise be missed
  double speed_margin_mph = 0.5;  // kept under regulatory speed limits
  double waypoint_spacing_m = 5.0;
  double lane_change_time_s = 2.5;
  double lane_change_min_m = 20.0;
  double stop_offset_m = 0.5;     // stop this far before a stop line
  double follow_standoff_m = 6.0;
  double follow_headway_s = 1.0;
  double follow_gap_gain = 0.2;  // 1/s
  double lookahead_m = 5.0;
  double speed_gain = 1.0;        // 1/s, longitudinal feedback on speed error
  double emergency_decel = 8.0;
};

/// Stop-line dwell the ego has accumulated so far, per stop line.
struct StopHistory {
  static constexpr double kSpeedThreshold = 0.1;  // m/s
  static constexpr double kLineWindow = 1.0;      // m before the line

  struct Entry {
    double best = 0.0;                  // longest finished or ongoing stop
    std::optional<double> run_started;  // an ongoing stop began here
  };
  std::map<double, Entry> lines;

  void update(const std::vector<double>& stop_lines, double station, double speed, double t) {
    for (double line : stop_lines) {
      auto& e = lines[line];
      const bool stopped = speed < kSpeedThreshold && station <= line && station >= line - kLineWindow;
      if (stopped) {
        if (!e.run_started) e.run_started = t;
        e.best = std::max(e.best, t - *e.run_started);
      } else {
        e.run_started.reset();
      }
    }
  }

  Entry at(double line) const {
    const auto it = lines.find(line);
    return it == lines.end() ? Entry{} : it->second;
  }
};

/// Inputs to one planning cycle.
struct PlanningContext {
  const World* world = nullptr;
  const regdb::RegulationDatabase* db = nullptr;
  const PlannerParams* params = nullptr;
  const fsm::TransitionTable* table = nullptr;
  const SimState* state = nullptr;
  geom::FrenetPose ego;
  scene::SceneConditions conditions;  // merged, with the map road type filled in
  fsm::DrivingState current;
  const StopHistory* stops = nullptr;
  bool emergency_cleared = true;
};

struct RejectedCandidate {
  fsm::DrivingState state;
  std::string reason;
};

struct PlanOutcome {
  fsm::RouteContext route;
  fsm::Triggers triggers;
  std::vector<cost::Evaluation> evaluations;
  std::vector<RejectedCandidate> rejected;
  std::optional<std::size_t> selected;  // index into evaluations
  bool dwell_overridden = false;
  double goal_station = 0.0;

  const cost::Evaluation& chosen() const { return evaluations.at(*selected); }
};

namespace detail {

inline double hermite_lateral(double x, double d0, double slope0_scaled, double d1) {
  x = std::clamp(x, 0.0, 1.0);
  const double x2 = x * x, x3 = x2 * x;
  return (2 * x3 - 3 * x2 + 1) * d0 + (x3 - 2 * x2 + x) * slope0_scaled + (-2 * x3 + 3 * x2) * d1;
}

/// Lead actor in the lane centered at `lane_lateral`, ahead of the ego.
inline const ActorState* lead_in_lane(const World& w, const SimState& s, const geom::FrenetPose& ego,
                                      double lane_lateral) {
  const double half_lane = 0.5 * w.lane_width_at(ego.station);
  const ActorState* best = nullptr;
  for (const auto& a : s.actors) {
    if (!a.present || a.station <= ego.station) continue;
    if (std::abs(a.lateral - lane_lateral) >= half_lane) continue;
    if (!best || a.station < best->station) best = &a;
  }
  return best;
}

inline std::optional<double> next_stop_line(const World& w, double station, double behind = 1.0) {
  for (double line : w.stop_lines()) {
    if (line >= station - behind) return line;
  }
  return std::nullopt;
}

}  // namespace detail

/// Shape of the motion a target state asks for.
struct PlanShape {
  double target_lateral = 0.0;
  std::optional<double> stop_station;
  bool follow_lead = false;
  bool regulatory_caps = true;
};

inline PlanShape shape_for(const PlanningContext& ctx, const fsm::DrivingState& next,
                           const fsm::RouteContext& route) {
  using enum fsm::Substate;
  const World& w = *ctx.world;
  const double lane = w.lane_width_at(ctx.ego.station);
  PlanShape shape;
  const auto line = detail::next_stop_line(w, ctx.ego.station);
  const bool turning_ahead = fsm::turns_ahead(route, geom::BranchDirection::Right) ||
                             fsm::turns_ahead(route, geom::BranchDirection::Left);
  const double line_stop = line ? *line - ctx.params->stop_offset_m : 0.0;

  switch (next.superstate) {
    case fsm::Superstate::LaneFollowing:
      if (line && route.before_stop_line && turning_ahead) shape.stop_station = line_stop;
      shape.follow_lead = next.substate == CarFollowing;
      break;
    case fsm::Superstate::IntersectionHandling:
      if (next.substate == StoppedAtLine && line) shape.stop_station = line_stop;
      shape.follow_lead = next.substate == CarFollowing;
      break;
    case fsm::Superstate::Overtaking:
      if (next.substate == OvertakeOut) shape.target_lateral = lane;
      if (next.substate == CarFollowing) {
        shape.target_lateral = std::round(ctx.ego.lateral / lane) * lane;
        shape.follow_lead = true;
      }
      break;
    case fsm::Superstate::EmergencyStop:
      shape.target_lateral = ctx.ego.lateral;
      break;
  }
  return shape;
}

/// Builds the candidate trajectory for `shape`. Throws InfeasibleTrajectory
/// when a required stop cannot be met.
inline geom::Trajectory build_trajectory(const PlanningContext& ctx, const PlanShape& shape,
                                         const std::vector<regdb::RegulationRecord>& applicable) {
  const World& w = *ctx.world;
  const PlannerParams& p = *ctx.params;
  const SimState& s = *ctx.state;
  const double s0 = ctx.ego.station;
  const double route_end = w.path.spline.length();

  double v_cap = 0.0;
  for (const auto& id : w.route) v_cap = std::max(v_cap, mph_to_mps(w.map.at(id).speed_limit_mph));
  const double reach = std::max(std::max(s.ego.speed, v_cap) * p.horizon_s + 10.0, 30.0);
  // A plan that ends at rest has no business steering beyond its stop.
  const double s_end = shape.stop_station
                           ? std::min(route_end, std::max(*shape.stop_station, s0) + 2.0)
                           : std::min(route_end, s0 + reach);

  // Lateral profile: cubic Hermite from the current offset and slope to the
  // target lane, over a length that shrinks with the remaining offset.
  const double lane = w.lane_width_at(s0);
  const double d0 = ctx.ego.lateral;
  const double rel_heading = wrap_angle(s.ego.heading - w.heading_at(s0));
  const double full = std::max(p.lane_change_min_m, p.lane_change_time_s * s.ego.speed);
  const double remaining = std::abs(shape.target_lateral - d0);
  const double change_len = std::max(8.0, full * std::min(1.0, remaining / lane));
  const double slope = std::clamp(std::tan(rel_heading), -0.3, 0.3) * change_len;

  std::vector<geom::Point2> waypoints;
  for (double st = s0 + p.waypoint_spacing_m; st < s_end + 1e-9; st += p.waypoint_spacing_m) {
    const double d = detail::hermite_lateral((st - s0) / change_len, d0, slope, shape.target_lateral);
    waypoints.push_back(w.point_at(st, d));
  }
  if (waypoints.empty() || s_end - (s0 + p.waypoint_spacing_m * waypoints.size()) > 1.0) {
    waypoints.push_back(w.point_at(s_end, shape.target_lateral));
  }

  geom::ProfileConstraints pc;
  for (std::size_t i = 0; i < w.route.size(); ++i) {
    const double a = w.path.segment_start[i] - s0, b = w.path.segment_end[i] - s0;
    if (b <= 0.0) continue;
    pc.caps.push_back({std::max(0.0, a), b, mph_to_mps(w.map.at(w.route[i]).speed_limit_mph)});
  }

  if (shape.regulatory_caps) {
    const auto& c = ctx.conditions;
    std::optional<double> global_mph;
    if (c.posted_speed_limit) global_mph = *c.posted_speed_limit;
    for (const auto& r : applicable) {
      const auto lim = r.numeric("max_speed");
      if (!lim || r.legality) continue;
      if (r.zoned()) {
        if (c.school_zone_ahead) {
          pc.caps.push_back({feet_to_meters(*c.school_zone_ahead), std::numeric_limits<double>::infinity(),
                             mph_to_mps(*lim - p.speed_margin_mph)});
        }
      } else {
        global_mph = global_mph ? std::min(*global_mph, *lim) : *lim;
      }
    }
    if (global_mph) pc.caps.push_back({0.0, std::numeric_limits<double>::infinity(),
                                       mph_to_mps(*global_mph - p.speed_margin_mph)});
  }

  if (shape.follow_lead) {
    if (const auto* lead = detail::lead_in_lane(w, s, ctx.ego, shape.target_lateral)) {
      const double gap = p.follow_standoff_m + p.follow_headway_s * lead->speed +
                         0.5 * (w.ego_size.length + lead->length);
      pc.caps.push_back({std::max(0.0, lead->station - gap - s0),
                         std::numeric_limits<double>::infinity(), lead->speed});
      // Closing speed proportional to the surplus gap, so the approach settles
      // instead of surging between replans. The surplus is predicted to shrink
      // along the plan as the ego gains on the lead.
      const double surplus = std::max(0.0, lead->station - s0 - gap);
      const double closing = 1.0 - lead->speed / std::max({s.ego.speed, lead->speed, 0.1});
      constexpr double kBin = 0.5;
      for (double u = 0.0;; u += kBin) {
        const double left = std::max(0.0, surplus - closing * u);
        pc.caps.push_back({u, left > 0.0 ? u + kBin : std::numeric_limits<double>::infinity(),
                           lead->speed + p.follow_gap_gain * left});
        if (left <= 0.0 || u > 1000.0) break;
      }
    }
  }
  if (shape.stop_station) pc.stop_at = std::max(0.0, *shape.stop_station - s0);

  const geom::StartState start{s.ego.position, s.ego.heading, s.ego.speed};
  try {
    return geom::generate_trajectory(start, waypoints, {mps_to_mph(v_cap), p.max_accel, p.plan_decel},
                                     p.horizon_s, pc, &w.path.spline, s0);
  } catch (const geom::InfeasibleTrajectory&) {
    // Late for a stop (tracking lag, late detection): brake just as hard as
    // the remaining distance requires, up to the firm ceiling.
    if (!pc.stop_at) throw;
    const double needed = s.ego.speed * s.ego.speed / (2.0 * std::max(*pc.stop_at, 1e-3));
    const double decel = std::max(p.plan_decel, 1.05 * needed);
    if (decel > p.firm_decel) throw;
    return geom::generate_trajectory(start, waypoints, {mps_to_mph(v_cap), p.max_accel, decel},
                                     p.horizon_s, pc, &w.path.spline, s0);
  }
}

/// Legality-relevant measurements of a candidate trajectory.
inline regdb::PlanFacts plan_facts(const PlanningContext& ctx, const fsm::DrivingState& next,
                                   const geom::Trajectory& traj) {
  const World& w = *ctx.world;
  regdb::PlanFacts f;
  f.current = regdb::StateRef::of(ctx.current);
  f.next = regdb::StateRef::of(next);
  f.max_speed_mph = mps_to_mph(traj.max_speed());

  if (const auto ahead = ctx.conditions.school_zone_ahead) {
    const double zone_start = ctx.ego.station + feet_to_meters(*ahead);
    for (const auto& smp : traj.samples) {
      if (smp.station >= zone_start) {
        f.max_speed_in_zone_mph = std::max(f.max_speed_in_zone_mph.value_or(0.0), mps_to_mph(smp.speed));
      }
    }
  }

  for (const auto& a : ctx.state->actors) {
    if (!a.present) continue;
    for (const auto& smp : traj.samples) {
      const double as = a.station + a.speed * smp.t;
      if (std::abs(smp.station - as) >= 0.5 * (w.ego_size.length + a.length)) continue;
      const double clearance = std::abs(smp.lateral - a.lateral) - 0.5 * (w.ego_size.width + a.width);
      f.min_clearance_m = std::min(f.min_clearance_m.value_or(clearance), clearance);
    }
  }

  // Stop-line dwell: only meaningful when this plan carries the ego across.
  const double start = traj.samples.front().station;
  for (double line : w.stop_lines()) {
    if (start > line || traj.samples.back().station <= line) continue;
    const auto hist = ctx.stops->at(line);
    double best = hist.best, run = 0.0;
    std::optional<double> run_t0;
    bool leading = true;
    for (const auto& smp : traj.samples) {
      if (smp.station > line) break;
      const bool stopped = smp.speed < StopHistory::kSpeedThreshold &&
                           smp.station >= line - StopHistory::kLineWindow;
      if (stopped) {
        if (!run_t0) run_t0 = smp.t;
        run = smp.t - *run_t0;
        const double carried = leading && hist.run_started ? ctx.state->t - *hist.run_started : 0.0;
        best = std::max(best, run + carried);
      } else {
        run_t0.reset();
        leading = false;
      }
    }
    f.stop_time_s = best;
    break;
  }
  return f;
}

inline fsm::RouteContext route_context(const PlanningContext& ctx) {
  const World& w = *ctx.world;
  fsm::RouteContext r;
  const std::size_t i = w.path.segment_index_at(ctx.ego.station);
  const auto& seg = w.map.at(w.route[i]);
  r.next = geom::route_next_segments(w.map, seg.id, w.route);
  r.has_left_lane = seg.left_neighbor.has_value();
  r.lateral_offset = ctx.ego.lateral;
  for (const auto& z : seg.zones) {
    if (z.kind == geom::ZoneKind::StopLine &&
        ctx.ego.station < w.path.segment_start[i] + z.start) {
      r.before_stop_line = true;
    }
  }
  r.emergency_cleared = ctx.emergency_cleared;
  r.now = ctx.state->t;
  return r;
}

inline fsm::Triggers triggers_from(const scene::SceneConditions& c) {
  fsm::Triggers t;
  t.intersection_known = c.intersection_ahead.has_value();
  t.actor_ahead = c.cyclist_ahead && *c.cyclist_ahead > 0.0;
  t.original_lane_clear = c.right_lane_clear == true;
  return t;
}

/// One planning cycle: candidates from the FSM, a trajectory and legality
/// verdict for each, then the cheapest plan.
inline PlanOutcome plan_cycle(const PlanningContext& ctx) {
  PlanOutcome out;
  out.route = route_context(ctx);
  out.triggers = triggers_from(ctx.conditions);
  const PlannerParams& p = *ctx.params;

  // Progress an unobstructed drive along the route would make; the distance
  // term measures each plan against it.
  {
    PlanShape free;
    free.regulatory_caps = false;
    const auto ideal = build_trajectory(ctx, free, {});
    out.goal_station = std::max(ideal.end_station(), ctx.ego.station + 1.0);
  }

  const auto evaluate_all = [&](const std::vector<fsm::DrivingState>& candidates) {
    for (const auto& next : candidates) {
      try {
        const auto applicable = regdb::query_applicable(*ctx.db, regdb::StateRef::of(ctx.current),
                                                        regdb::StateRef::of(next), ctx.conditions);
        cost::CandidatePlan plan;
        plan.plan_id = out.evaluations.size();
        plan.current_state = ctx.current;
        plan.next_state = next;
        plan.trajectory = build_trajectory(ctx, shape_for(ctx, next, out.route), applicable);
        if (plan.trajectory.samples.size() < 2) throw geom::InfeasibleTrajectory("path too short");
        plan.facts = plan_facts(ctx, next, plan.trajectory);
        plan.verdict = cost::evaluate_legality(*ctx.db, plan, ctx.conditions);
        cost::CostBreakdown c;
        c.legal = cost::legality_cost(*plan.verdict, p.illegal_penalty);
        std::tie(c.safety, c.comfort) = cost::safety_comfort_cost(plan.trajectory, p.norms);
        c.distance = cost::distance_cost(plan.trajectory, out.goal_station);
        out.evaluations.emplace_back(std::move(plan), cost::with_total(p.weights, c));
      } catch (const geom::GeometryError& e) {
        out.rejected.push_back({next, e.what()});
      }
    }
  };

  evaluate_all(fsm::candidate_next_states(ctx.current, out.route, out.triggers, *ctx.table));
  if (out.evaluations.empty()) {
    out.dwell_overridden = true;
    evaluate_all(fsm::candidate_next_states(ctx.current, out.route, out.triggers, *ctx.table, true));
  }
  if (!out.evaluations.empty()) {
    const auto& best = cost::select_plan(out.evaluations);
    out.selected = best.plan_id;
  }
  return out;
}

/// Speed tracking plus pure pursuit on the plan's sampled positions.
inline EgoCommand track(const geom::Trajectory& traj, double plan_age, const SimState& s,
                        const PlannerParams& p, double ego_station) {
  EgoCommand cmd;
  if (traj.samples.empty()) return cmd;
  const auto k = std::min(traj.samples.size() - 1,
                          static_cast<std::size_t>(std::max(0.0, plan_age) / geom::kTrajectoryDt + 1e-9));
  const auto& ref = traj.samples[k];
  cmd.accel = ref.accel + p.speed_gain * (ref.speed - s.ego.speed);
  // Plans that end at rest are closed on position, so lag in following the
  // speed profile cannot carry the ego past the stop.
  if (traj.samples.back().speed < StopHistory::kSpeedThreshold) {
    const double left = traj.samples.back().station - ego_station;
    if (left < 0.1) {
      cmd.accel = -s.ego.speed / geom::kTrajectoryDt;  // arrived: hold
    } else if (s.ego.speed > 0.0) {
      const double needed = s.ego.speed * s.ego.speed / (2.0 * left);
      if (needed >= 1.0) cmd.accel = std::min(cmd.accel, -needed);
    }
  }
  if (s.ego.speed <= 0.0 && cmd.accel < 0.0) cmd.accel = 0.0;
  cmd.accel = std::clamp(cmd.accel, -kMaxAccelCommand, kMaxAccelCommand);

  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const double d = geom::distance(traj.samples[i].position, s.ego.position);
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  std::optional<geom::Point2> target;
  for (std::size_t i = nearest; i < traj.samples.size(); ++i) {
    if (geom::distance(traj.samples[i].position, s.ego.position) >= p.lookahead_m) {
      target = traj.samples[i].position;
      break;
    }
  }
  if (!target) {
    const auto& last = traj.samples.back();
    const double left = std::max(0.0, p.lookahead_m - geom::distance(last.position, s.ego.position));
    target = last.position + geom::Point2{std::cos(last.heading), std::sin(last.heading)} * left;
  }
  const geom::Point2 d = *target - s.ego.position;
  const double dist = std::hypot(d.x, d.y);
  if (dist > 1e-6) {
    const double alpha = wrap_angle(std::atan2(d.y, d.x) - s.ego.heading);
    cmd.curvature = std::clamp(2.0 * std::sin(alpha) / dist, -kMaxCurvatureCommand, kMaxCurvatureCommand);
  }
  return cmd;
}

}  // namespace regnav::sim
