#pragma once

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "regnav/sim/runner.hpp"

// Scenario configs as JSON: map, actors, signal schedules, weights, cadences
// and seed in one nested document. Absent keys keep their defaults.

namespace regnav::sim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using nlohmann::json;

template <typename E, std::size_t N, typename Name>
E enum_from(const json& j, const std::array<E, N>& all, Name name, const char* what) {
  const auto s = j.get<std::string>();
  for (E e : all) {
    if (std::string(name(e)) == s) return e;
  }
  throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

inline geom::Point2 point_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("points are [x, y] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

inline json segment_json(const geom::RoadSegment& s) {
  json pts = json::array();
  for (const auto& p : s.centerline) pts.push_back({p.x, p.y});
  json zones = json::array();
  for (const auto& z : s.zones) zones.push_back({{"kind", geom::to_string(z.kind)}, {"start", z.start}, {"end", z.end}});
  json j = {{"id", s.id},
            {"centerline", pts},
            {"lane_width", s.lane_width},
            {"speed_limit_mph", s.speed_limit_mph},
            {"road_type", geom::to_string(s.road_type)},
            {"successors", s.successors},
            {"branch", geom::to_string(s.branch_direction)},
            {"zones", zones},
            {"left_marking", geom::to_string(s.left_marking)}};
  if (s.left_neighbor) j["left_neighbor"] = *s.left_neighbor;
  return j;
}

inline geom::RoadSegment segment_from(const json& j) {
  using namespace geom;
  RoadSegment s;
  s.id = j.at("id").get<std::string>();
  for (const auto& p : j.at("centerline")) s.centerline.push_back(point_from(p));
  read(j, "lane_width", s.lane_width);
  read(j, "speed_limit_mph", s.speed_limit_mph);
  read(j, "successors", s.successors);
  if (j.contains("road_type")) {
    s.road_type = enum_from(j["road_type"], std::array{RoadType::Highway, RoadType::Residential, RoadType::Freeway},
                            [](RoadType r) { return to_string(r); }, "road type");
  }
  if (j.contains("branch")) {
    s.branch_direction = enum_from(
        j["branch"], std::array{BranchDirection::Straight, BranchDirection::Left, BranchDirection::Right},
        [](BranchDirection b) { return to_string(b); }, "branch direction");
  }
  if (j.contains("left_marking")) {
    s.left_marking = enum_from(j["left_marking"],
                               std::array{MarkingStyle::None, MarkingStyle::Dashed, MarkingStyle::Solid},
                               [](MarkingStyle m) { return to_string(m); }, "marking");
  }
  if (j.contains("left_neighbor")) s.left_neighbor = j["left_neighbor"].get<std::string>();
  for (const auto& z : j.value("zones", json::array())) {
    Zone zone;
    zone.kind = enum_from(z.at("kind"), std::array{ZoneKind::SchoolZone, ZoneKind::StopLine},
                          [](ZoneKind k) { return to_string(k); }, "zone kind");
    zone.start = z.at("start").get<double>();
    zone.end = z.value("end", zone.start);
    s.zones.push_back(zone);
  }
  return s;
}

inline constexpr std::array kLights = {scene::TrafficLight::Red, scene::TrafficLight::Green,
                                       scene::TrafficLight::Yellow};

}  // namespace detail

inline nlohmann::json to_json(const RunSpec& spec) {
  using nlohmann::json;
  const World& w = spec.world;
  json segments = json::array();
  for (const auto& s : w.map.segments) segments.push_back(detail::segment_json(s));
  json signals = json::array();
  for (const auto& sig : w.signals) {
    json phases = json::array();
    for (const auto& p : sig.phases) phases.push_back({{"light", scene::to_string(p.light)}, {"duration", p.duration}});
    signals.push_back({{"id", sig.id}, {"station", sig.station}, {"phases", phases}, {"cycle", sig.cycle}});
  }
  json signs = json::array();
  for (const auto& s : w.signs) {
    json j = {{"kind", scene::to_string(s.kind)}, {"station", s.station}};
    if (s.value_mph) j["value_mph"] = *s.value_mph;
    signs.push_back(j);
  }
  json actors = json::array();
  for (const auto& a : w.actors) {
    json j = {{"id", a.id},         {"kind", to_string(a.kind)}, {"station", a.station},
              {"lateral", a.lateral}, {"speed", a.speed},        {"length", a.length},
              {"width", a.width},   {"appear_at", a.appear_at}};
    if (a.vanish_at) j["vanish_at"] = *a.vanish_at;
    actors.push_back(j);
  }
  const PlannerParams& p = spec.planner;
  json out = {
      {"scenario", spec.scenario},
      {"variant", spec.variant},
      {"seed", spec.seed},
      {"map", {{"segments", segments}}},
      {"route", w.route},
      {"signals", signals},
      {"signs", signs},
      {"actors", actors},
      {"ego",
       {{"station", spec.ego_station},
        {"lateral", spec.ego_lateral},
        {"speed", spec.ego_speed},
        {"length", w.ego_size.length},
        {"width", w.ego_size.width}}},
      {"goal_station", spec.goal_station},
      {"view_range", w.view_range},
      {"weights",
       {{"legal", p.weights.legal},
        {"safety", p.weights.safety},
        {"comfort", p.weights.comfort},
        {"distance", p.weights.distance}}},
      {"norms",
       {{"accel_ref", p.norms.accel_ref},
        {"speed_variance_ref", p.norms.speed_variance_ref},
        {"curvature_ref", p.norms.curvature_ref}}},
      {"planner",
       {{"illegal_penalty", p.illegal_penalty},
        {"horizon_s", p.horizon_s},
        {"max_accel", p.max_accel},
        {"plan_decel", p.plan_decel},
        {"firm_decel", p.firm_decel},
        {"speed_margin_mph", p.speed_margin_mph},
        {"waypoint_spacing_m", p.waypoint_spacing_m},
        {"lane_change_time_s", p.lane_change_time_s},
        {"lane_change_min_m", p.lane_change_min_m},
        {"stop_offset_m", p.stop_offset_m},
        {"follow_standoff_m", p.follow_standoff_m},
        {"follow_headway_s", p.follow_headway_s},
        {"follow_gap_gain", p.follow_gap_gain},
        {"lookahead_m", p.lookahead_m},
        {"speed_gain", p.speed_gain},
        {"emergency_decel", p.emergency_decel}}},
      {"fsm",
       {{"min_dwell_s", spec.table.min_dwell_s},
        {"emergency_ttc_s", spec.table.emergency.ttc_s},
        {"emergency_gap_m", spec.table.emergency.min_gap_m}}},
      {"timing",
       {{"physics_dt", spec.timing.physics_dt},
        {"planner_every", spec.timing.planner_every},
        {"describer_every", spec.timing.describer_every},
        {"timeout_s", spec.timing.timeout_s},
        {"deadlock_s", spec.timing.deadlock_s},
        {"staleness_s", spec.timing.staleness_s}}},
      {"misdetection",
       {{"end_road_work_as_road_work", spec.misdetection.end_road_work_as_road_work},
        {"stop_here_on_red_as_stop", spec.misdetection.stop_here_on_red_as_stop},
        {"probability", spec.misdetection.probability}}},
  };
  if (spec.emergency) {
    out["emergency"] = {{"at_s", spec.emergency->at_s},
                        {"gap_m", spec.emergency->gap_m},
                        {"duration_s", spec.emergency->duration_s}};
  }
  return out;
}

/// Builds a run from a config document. Malformed input throws ConfigError.
inline RunSpec run_spec_from_json(const nlohmann::json& j) {
  using nlohmann::json;
  using detail::read;
  try {
    RunSpec spec;
    read(j, "scenario", spec.scenario);
    read(j, "variant", spec.variant);
    read(j, "seed", spec.seed);

    geom::VectorMap map;
    for (const auto& s : j.at("map").at("segments")) map.segments.push_back(detail::segment_from(s));
    World w(std::move(map), j.at("route").get<std::vector<std::string>>());

    for (const auto& s : j.value("signals", json::array())) {
      Signal sig;
      sig.id = s.value("id", 0);
      sig.station = s.at("station").get<double>();
      read(s, "cycle", sig.cycle);
      for (const auto& p : s.at("phases")) {
        sig.phases.push_back({detail::enum_from(p.at("light"), detail::kLights,
                                                [](scene::TrafficLight l) { return scene::to_string(l); },
                                                "light"),
                              p.at("duration").get<double>()});
      }
      if (sig.phases.empty()) throw ConfigError("signal without phases");
      w.signals.push_back(sig);
    }
    for (const auto& s : j.value("signs", json::array())) {
      const auto kind = scene::sign_from_string(s.at("kind").get<std::string>());
      if (!kind) throw ConfigError("unknown sign '" + s.at("kind").get<std::string>() + "'");
      SignPlacement sp{*kind, s.at("station").get<double>(), std::nullopt};
      if (s.contains("value_mph")) sp.value_mph = s["value_mph"].get<double>();
      w.signs.push_back(sp);
    }
    for (const auto& a : j.value("actors", json::array())) {
      ActorScript as;
      as.id = a.at("id").get<int>();
      as.kind = actor_kind_from_string(a.at("kind").get<std::string>());
      read(a, "station", as.station);
      read(a, "lateral", as.lateral);
      read(a, "speed", as.speed);
      read(a, "length", as.length);
      read(a, "width", as.width);
      read(a, "appear_at", as.appear_at);
      if (a.contains("vanish_at")) as.vanish_at = a["vanish_at"].get<double>();
      w.actors.push_back(as);
    }
    read(j, "view_range", w.view_range);

    const json ego = j.value("ego", json::object());
    read(ego, "station", spec.ego_station);
    read(ego, "lateral", spec.ego_lateral);
    read(ego, "speed", spec.ego_speed);
    read(ego, "length", w.ego_size.length);
    read(ego, "width", w.ego_size.width);
    spec.goal_station = j.value("goal_station", w.path.spline.length());
    spec.world = std::move(w);

    PlannerParams& p = spec.planner;
    const json weights = j.value("weights", json::object());
    read(weights, "legal", p.weights.legal);
    read(weights, "safety", p.weights.safety);
    read(weights, "comfort", p.weights.comfort);
    read(weights, "distance", p.weights.distance);
    const json norms = j.value("norms", json::object());
    read(norms, "accel_ref", p.norms.accel_ref);
    read(norms, "speed_variance_ref", p.norms.speed_variance_ref);
    read(norms, "curvature_ref", p.norms.curvature_ref);
    const json pl = j.value("planner", json::object());
    read(pl, "illegal_penalty", p.illegal_penalty);
    read(pl, "horizon_s", p.horizon_s);
    read(pl, "max_accel", p.max_accel);
    read(pl, "plan_decel", p.plan_decel);
    read(pl, "firm_decel", p.firm_decel);
    read(pl, "speed_margin_mph", p.speed_margin_mph);
    read(pl, "waypoint_spacing_m", p.waypoint_spacing_m);
    read(pl, "lane_change_time_s", p.lane_change_time_s);
    read(pl, "lane_change_min_m", p.lane_change_min_m);
    read(pl, "stop_offset_m", p.stop_offset_m);
    read(pl, "follow_standoff_m", p.follow_standoff_m);
    read(pl, "follow_headway_s", p.follow_headway_s);
    read(pl, "follow_gap_gain", p.follow_gap_gain);
    read(pl, "lookahead_m", p.lookahead_m);
    read(pl, "speed_gain", p.speed_gain);
    read(pl, "emergency_decel", p.emergency_decel);

    const json fsm = j.value("fsm", json::object());
    read(fsm, "min_dwell_s", spec.table.min_dwell_s);
    read(fsm, "emergency_ttc_s", spec.table.emergency.ttc_s);
    read(fsm, "emergency_gap_m", spec.table.emergency.min_gap_m);

    const json tm = j.value("timing", json::object());
    read(tm, "physics_dt", spec.timing.physics_dt);
    read(tm, "planner_every", spec.timing.planner_every);
    read(tm, "describer_every", spec.timing.describer_every);
    read(tm, "timeout_s", spec.timing.timeout_s);
    read(tm, "deadlock_s", spec.timing.deadlock_s);
    read(tm, "staleness_s", spec.timing.staleness_s);

    const json mis = j.value("misdetection", json::object());
    read(mis, "end_road_work_as_road_work", spec.misdetection.end_road_work_as_road_work);
    read(mis, "stop_here_on_red_as_stop", spec.misdetection.stop_here_on_red_as_stop);
    read(mis, "probability", spec.misdetection.probability);

    if (j.contains("emergency")) {
      EmergencyInjection e;
      read(j["emergency"], "at_s", e.at_s);
      read(j["emergency"], "gap_m", e.gap_m);
      read(j["emergency"], "duration_s", e.duration_s);
      spec.emergency = e;
    }
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad scenario config: ") + e.what());
  } catch (const geom::GeometryError& e) {
    throw ConfigError(std::string("bad scenario map: ") + e.what());
  } catch (const SimError& e) {
    throw ConfigError(std::string("bad scenario: ") + e.what());
  }
}

inline RunSpec load_run_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  try {
    return run_spec_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void save_run_spec(const RunSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << to_json(spec).dump(2) << '\n';
}

}  // namespace regnav::sim
