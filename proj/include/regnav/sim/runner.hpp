#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regnav/fsm.hpp"
#include "regnav/regdb.hpp"
#include "regnav/scene.hpp"
#include "regnav/sim/eventlog.hpp"
#include "regnav/sim/planner.hpp"
#include "regnav/sim/world.hpp"

namespace regnav::sim {

struct TimingParams {
  double physics_dt = 0.1;
  int planner_every = 5;    // physics steps per planning cycle
  int describer_every = 5;  // physics steps per describer query
  double timeout_s = 120.0;
  double deadlock_s = 5.0;
  double staleness_s = 1.0;
};

/// A stopped obstacle dropped into the ego's path mid-run.
struct EmergencyInjection {
  double at_s = 0.0;
  double gap_m = 4.0;  // bumper to bumper
  double duration_s = 3.0;
};

struct RunSpec {
  std::string scenario;
  std::string variant;
  std::uint64_t seed = 0;
  World world;
  double ego_station = 0.0;
  double ego_lateral = 0.0;
  double ego_speed = 0.0;
  double goal_station = 0.0;
  PlannerParams planner;
  fsm::TransitionTable table = fsm::TransitionTable::standard();
  TimingParams timing;
  scene::Misdetection misdetection;
  std::optional<EmergencyInjection> emergency;
};

enum class RunStatus { Completed, Timeout, Deadlock };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Timeout: return "timeout";
    case RunStatus::Deadlock: return "deadlock";
  }
  return "timeout";
}

struct RunResult {
  RunStatus status = RunStatus::Timeout;
  EventLog log;
  SimState final_state;
  fsm::DrivingState final_fsm;
  int describer_queries = 0;
  int planner_cycles = 0;
};

namespace detail {

inline LogRow ego_row(const World& w, const SimState& s, const geom::FrenetPose& fp,
                      const EgoCommand& cmd, const fsm::DrivingState& st, long plan, double total) {
  LogRow r;
  r.t = s.t;
  r.record = "ego";
  r.x = s.ego.position.x;
  r.y = s.ego.position.y;
  r.heading = s.ego.heading;
  r.speed = s.ego.speed;
  r.accel = cmd.accel;
  r.curvature = cmd.curvature;
  r.station = fp.station;
  r.lateral = fp.lateral;
  r.length = w.ego_size.length;
  r.width = w.ego_size.width;
  r.superstate = std::string(fsm::name(st.superstate));
  r.substate = std::string(fsm::name(st.substate));
  r.selected_plan = plan;
  r.total_cost = total;
  return r;
}

inline LogRow actor_row(const World& w, const SimState& s, const ActorState& a) {
  LogRow r;
  r.t = s.t;
  r.record = "actor";
  r.id = a.id;
  const auto p = w.point_at(a.station, a.lateral);
  r.x = p.x;
  r.y = p.y;
  r.heading = w.heading_at(a.station);
  r.speed = a.speed;
  r.station = a.station;
  r.lateral = a.lateral;
  r.length = a.length;
  r.width = a.width;
  r.info = {{"kind", to_string(a.kind)}};
  return r;
}

inline void log_static(const World& w, EventLog& log) {
  int id = 0;
  for (double line : w.stop_lines()) {
    LogRow r;
    r.record = "stop_line";
    r.id = id++;
    const auto p = w.point_at(line, 0.0);
    r.x = p.x;
    r.y = p.y;
    r.station = line;
    log.rows.push_back(r);
  }
  id = 0;
  for (const auto& [start, end] : w.school_zones()) {
    LogRow r;
    r.record = "zone";
    r.id = id++;
    const auto p = w.point_at(start, 0.0);
    r.x = p.x;
    r.y = p.y;
    r.station = start;
    r.length = end - start;
    r.info = {{"kind", "school_zone"}};
    log.rows.push_back(r);
  }
  id = 0;
  for (const auto& sign : w.signs) {
    LogRow r;
    r.record = "sign";
    r.id = id++;
    const auto p = w.point_at(sign.station, 0.0);
    r.x = p.x;
    r.y = p.y;
    r.station = sign.station;
    r.info = {{"kind", std::string(scene::to_string(sign.kind))}};
    if (sign.value_mph) r.info["value_mph"] = *sign.value_mph;
    log.rows.push_back(r);
  }
}

inline LogRow signal_row(const World& w, const SimState& s, std::size_t i) {
  LogRow r;
  r.t = s.t;
  r.record = "signal";
  r.id = w.signals[i].id;
  const auto p = w.point_at(w.signals[i].station, 0.0);
  r.x = p.x;
  r.y = p.y;
  r.station = w.signals[i].station;
  r.info = {{"light", std::string(scene::to_string(s.lights[i]))}};
  return r;
}

}  // namespace detail

/// Runs one closed-loop scenario: physics every step, describer and planner
/// on their own schedule, the emergency check on every step.
inline RunResult run_scenario(const RunSpec& spec, const regdb::RegulationDatabase& db) {
  using fsm::Superstate;
  using fsm::Substate;
  const TimingParams& tm = spec.timing;
  if (!(tm.physics_dt > 0.0) || tm.planner_every < 1 || tm.describer_every < 1) {
    throw SimError("invalid timing parameters");
  }
  spec.planner.weights.check();

  World world = spec.world;
  RunResult res;
  EventLog& log = res.log;
  log.scenario = spec.scenario;
  log.variant = spec.variant;
  log.seed = spec.seed;
  detail::log_static(world, log);

  SimState s = initial_state(world, spec.ego_station, spec.ego_lateral, spec.ego_speed);
  fsm::DrivingState cur(Superstate::LaneFollowing, Substate::GoStraight, 0.0);
  scene::Misdetection mis = spec.misdetection;
  mis.seed ^= spec.seed;

  scene::SceneConditions known;
  StopHistory stops;
  const auto stop_lines = world.stop_lines();
  const auto zones = world.school_zones();
  geom::Trajectory active;
  double plan_t0 = 0.0, last_feasible = 0.0, hint = spec.ego_station;
  long selected_plan = -1;
  double selected_total = std::numeric_limits<double>::quiet_NaN();
  int query_id = 0, cycle = 0;
  bool injected = false;
  std::vector<scene::TrafficLight> shown_lights;
  std::vector<bool> inside_zone(zones.size(), false);
  double prev_station = spec.ego_station;
  // Onset markers re-arm only after a second without braking.
  double coasting_since = -1.0;
  bool onset_armed = true;
  bool stopped = s.ego.speed < StopHistory::kSpeedThreshold, turning = false;

  const auto enter = [&](const fsm::DrivingState& next, const std::string& source) {
    const auto moved = fsm::transition(cur, next, s.t, spec.table);
    if (!moved.same_state(cur)) {
      log.event(s.t, {{"kind", "transition"}, {"from", cur.label()}, {"to", moved.label()},
                      {"source", source}});
    }
    cur = moved;
  };

  for (long k = 0;; ++k) {
    s.t = static_cast<double>(k) * tm.physics_dt;
    const auto fp = ego_frenet(world, s, hint);
    hint = fp.station;

    if (spec.emergency && !injected && s.t + 1e-9 >= spec.emergency->at_s) {
      injected = true;
      ActorScript ob;
      ob.id = 900;
      ob.kind = ActorKind::Vehicle;
      ob.length = 4.5;
      ob.width = 1.9;
      ob.station = fp.station + 0.5 * (world.ego_size.length + ob.length) + spec.emergency->gap_m;
      ob.lateral = fp.lateral;
      ob.speed = 0.0;
      ob.appear_at = s.t;
      ob.vanish_at = s.t + spec.emergency->duration_s;
      world.actors.push_back(ob);
      s.actors.push_back({ob.id, ob.kind, ob.station, ob.lateral, 0.0, ob.length, ob.width, false});
      refresh_scripted(world, s);
    }

    // Range-only hazard check, every physics step, no describer involved.
    const auto range = range_sensor(world, s, fp);
    const bool emergency =
        range && fsm::is_emergency({s.ego.speed, s.ego.accel}, range->gap, range->closing_speed,
                                   spec.table.emergency);
    stops.update(stop_lines, fp.station, s.ego.speed, s.t);
    if (emergency && cur.superstate != Superstate::EmergencyStop) {
      enter(fsm::DrivingState(Superstate::EmergencyStop, Substate::EmergencyBrake), "emergency");
      log.event(s.t, {{"kind", "decision"}, {"source", "emergency"}, {"describer_query", -1},
                      {"state", cur.label()}, {"gap_m", range->gap},
                      {"closing_mps", range->closing_speed}});
      selected_plan = -1;
      selected_total = std::numeric_limits<double>::quiet_NaN();
      active = {};
    }

    if (k % tm.describer_every == 0 && cur.superstate != Superstate::EmergencyStop) {
      const auto truth = scene_truth(world, s, fp);
      const auto resp = scene::describe_scripted(truth, fsm::prompt_for(cur.superstate), s.t, mis);
      known = scene::merge_conditions(known, scene::parse_response(resp), s.t, tm.staleness_s);
      ++query_id;
      ++res.describer_queries;
      log.event(s.t, {{"kind", "describer"}, {"query", query_id}, {"prompt", resp.prompt_used},
                      {"text", resp.text}, {"keywords", scene::keyword_view(known)}});
    }

    if (k % tm.planner_every == 0) {
      ++cycle;
      ++res.planner_cycles;
      if (cur.superstate == Superstate::EmergencyStop) {
        if (!emergency && s.t - cur.entered_at >= spec.table.min_dwell_s - 1e-9) {
          fsm::RouteContext rc;
          rc.emergency_cleared = true;
          rc.now = s.t;
          const auto cands = fsm::candidate_next_states(cur, rc, {}, spec.table);
          enter(cands.front(), "emergency");
        }
        log.event(s.t, {{"kind", "decision"}, {"source", "emergency"}, {"describer_query", -1},
                        {"cycle", cycle}, {"state", cur.label()}});
      } else {
        PlanningContext ctx;
        ctx.world = &world;
        ctx.db = &db;
        ctx.params = &spec.planner;
        ctx.table = &spec.table;
        ctx.state = &s;
        ctx.ego = fp;
        ctx.conditions = known;
        ctx.conditions.road_type = world.segment_at(fp.station).road_type;
        ctx.current = cur;
        ctx.stops = &stops;
        ctx.emergency_cleared = !emergency;
        const auto out = plan_cycle(ctx);
        for (const auto& [plan, c] : out.evaluations) {
          log.event(s.t, {{"kind", "candidate"},
                          {"cycle", cycle},
                          {"plan", plan.plan_id},
                          {"state", plan.next_state.label()},
                          {"legal", plan.verdict->legal},
                          {"matched", plan.verdict->matched_records},
                          {"cost", {c.legal, c.safety, c.comfort, c.distance, c.total}}});
        }
        for (const auto& r : out.rejected) {
          log.event(s.t, {{"kind", "rejected"}, {"cycle", cycle}, {"state", r.state.label()},
                          {"reason", r.reason}});
        }
        if (out.selected) {
          const auto& [plan, c] = out.chosen();
          enter(plan.next_state, "planner");
          active = plan.trajectory;
          plan_t0 = s.t;
          last_feasible = s.t;
          selected_plan = static_cast<long>(plan.plan_id);
          selected_total = c.total;
          log.event(s.t, {{"kind", "decision"}, {"source", "planner"},
                          {"describer_query", query_id}, {"cycle", cycle},
                          {"selected_plan", plan.plan_id}, {"state", cur.label()},
                          {"dwell_overridden", out.dwell_overridden}});
        } else if (s.t - last_feasible > tm.deadlock_s) {
          res.status = RunStatus::Deadlock;
          break;
        } else {
          // Nothing feasible to select: brake in place until the next cycle
          // finds a plan again.
          enter(fsm::DrivingState(Superstate::EmergencyStop, Substate::EmergencyBrake), "fallback");
          log.event(s.t, {{"kind", "decision"}, {"source", "fallback"}, {"describer_query", -1},
                          {"cycle", cycle}, {"state", cur.label()}});
          selected_plan = -1;
          selected_total = std::numeric_limits<double>::quiet_NaN();
          active = {};
        }
      }
    }

    EgoCommand cmd;
    if (cur.superstate == Superstate::EmergencyStop) {
      cmd.accel = -std::min(spec.planner.emergency_decel, s.ego.speed / tm.physics_dt);
      cmd.curvature = 0.0;
    } else if (!active.empty()) {
      cmd = track(active, s.t - plan_t0, s, spec.planner, fp.station);
    } else {
      cmd.accel = -std::min(spec.planner.plan_decel, s.ego.speed / tm.physics_dt);
    }

    log.rows.push_back(detail::ego_row(world, s, fp, cmd, cur, selected_plan, selected_total));
    for (const auto& a : s.actors) {
      if (a.present) log.rows.push_back(detail::actor_row(world, s, a));
    }
    for (std::size_t i = 0; i < s.lights.size(); ++i) {
      if (i >= shown_lights.size() || shown_lights[i] != s.lights[i]) {
        log.rows.push_back(detail::signal_row(world, s, i));
      }
    }
    shown_lights = s.lights;

    // Plot markers; the auditor recomputes what it needs from the ego rows.
    if (cmd.accel < -0.5) {
      if (onset_armed) log.event(s.t, {{"kind", "decel_onset"}});
      onset_armed = false;
      coasting_since = -1.0;
    } else if (!onset_armed && cmd.accel >= 0.0) {
      if (coasting_since < 0.0) coasting_since = s.t;
      if (s.t - coasting_since >= 1.0 - 1e-9) onset_armed = true;
    } else if (cmd.accel < 0.0) {
      coasting_since = -1.0;
    }
    for (std::size_t i = 0; i < zones.size(); ++i) {
      const bool in = fp.station >= zones[i].first && fp.station <= zones[i].second;
      if (in != inside_zone[i]) log.event(s.t, {{"kind", in ? "zone_enter" : "zone_exit"}, {"zone", i}});
      inside_zone[i] = in;
    }
    const bool now_stopped = s.ego.speed < StopHistory::kSpeedThreshold;
    if (now_stopped && !stopped) log.event(s.t, {{"kind", "stop_begin"}, {"station", fp.station}});
    stopped = now_stopped;
    for (double line : stop_lines) {
      if (prev_station <= line && fp.station > line) log.event(s.t, {{"kind", "line_cross"}});
    }
    prev_station = fp.station;
    if (!turning && std::abs(cmd.curvature) >= 0.02 && s.ego.speed > 0.0) {
      turning = true;
      log.event(s.t, {{"kind", "turn_begin"}});
    }

    if (fp.station >= spec.goal_station) {
      res.status = RunStatus::Completed;
      break;
    }
    if (s.t >= tm.timeout_s - 1e-9) {
      res.status = RunStatus::Timeout;
      break;
    }
    s = step(world, s, cmd, tm.physics_dt);
  }
  log.event(s.t, {{"kind", "end"}, {"status", to_string(res.status)}});
  res.final_state = s;
  res.final_fsm = cur;
  return res;
}

}  // namespace regnav::sim
