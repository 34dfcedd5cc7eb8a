#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "regnav/fsm.hpp"
#include "regnav/geom.hpp"
#include "regnav/scene.hpp"
#include "regnav/units.hpp"

namespace regnav::sim {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Actuator command outside the ego's physical envelope.
class CommandBoundsError : public SimError {
 public:
  using SimError::SimError;
};

inline constexpr double kMaxAccelCommand = 8.0;       // m/s^2, either sign
inline constexpr double kMaxCurvatureCommand = 0.3;   // 1/m

enum class ActorKind { Cyclist, Vehicle, Pedestrian };

inline std::string to_string(ActorKind k) {
  switch (k) {
    case ActorKind::Cyclist: return "cyclist";
    case ActorKind::Vehicle: return "vehicle";
    case ActorKind::Pedestrian: return "pedestrian";
  }
  return "vehicle";
}

inline ActorKind actor_kind_from_string(const std::string& s) {
  for (auto k : {ActorKind::Cyclist, ActorKind::Vehicle, ActorKind::Pedestrian}) {
    if (to_string(k) == s) return k;
  }
  throw SimError("unknown actor kind '" + s + "'");
}

/// Scripted road user that rides the route at a fixed lateral offset.
struct ActorScript {
  int id = 0;
  ActorKind kind = ActorKind::Cyclist;
  double station = 0.0;
  double lateral = 0.0;
  double speed = 0.0;
  double length = 1.8;
  double width = 0.6;
  double appear_at = 0.0;
  std::optional<double> vanish_at;
};

struct SignalPhase {
  scene::TrafficLight light = scene::TrafficLight::Red;
  double duration = 0.0;
};

/// Signal head at a route station. Phases play once and the last one holds,
/// unless `cycle` repeats them.
struct Signal {
  int id = 0;
  double station = 0.0;
  std::vector<SignalPhase> phases;
  bool cycle = false;

  scene::TrafficLight light_at(double t) const {
    if (phases.empty()) return scene::TrafficLight::None;
    double period = 0.0;
    for (const auto& p : phases) period += p.duration;
    double clock = t;
    if (cycle && period > 0.0) clock = std::fmod(t, period);
    for (const auto& p : phases) {
      if (clock < p.duration) return p.light;
      clock -= p.duration;
    }
    return phases.back().light;
  }
};

struct SignPlacement {
  scene::Sign kind = scene::Sign::Stop;
  double station = 0.0;
  std::optional<double> value_mph;  // speed-limit signs only
};

struct VehicleSize {
  double length = 4.5;
  double width = 1.9;
};

/// Everything static about a run: map, route, roadside furniture.
struct World {
  geom::VectorMap map;
  std::vector<std::string> route;
  geom::RoutePath path;
  std::vector<Signal> signals;
  std::vector<SignPlacement> signs;
  std::vector<ActorScript> actors;
  VehicleSize ego_size;
  double view_range = scene::kDefaultViewRange;

  World() = default;
  World(geom::VectorMap m, std::vector<std::string> r)
      : map(std::move(m)), route(std::move(r)), path(geom::build_route_path(map, route)) {
    if (const auto problems = map.validate(); !problems.empty()) {
      throw SimError("invalid map: " + problems.front());
    }
  }

  const geom::RoadSegment& segment_at(double station) const {
    return map.at(path.segment_ids[path.segment_index_at(station)]);
  }

  double lane_width_at(double station) const { return segment_at(station).lane_width; }

  /// Route stations of every stop line, ascending.
  std::vector<double> stop_lines() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < route.size(); ++i) {
      for (const auto& z : map.at(route[i]).zones) {
        if (z.kind == geom::ZoneKind::StopLine) out.push_back(path.segment_start[i] + z.start);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// School zones as [start, end] route stations.
  std::vector<std::pair<double, double>> school_zones() const {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < route.size(); ++i) {
      for (const auto& z : map.at(route[i]).zones) {
        if (z.kind == geom::ZoneKind::SchoolZone) {
          out.emplace_back(path.segment_start[i] + z.start, path.segment_start[i] + z.end);
        }
      }
    }
    return out;
  }

  geom::Point2 point_at(double station, double lateral) const {
    const double s = std::clamp(station, 0.0, path.spline.length());
    const auto e = path.spline.eval(s);
    const geom::Point2 normal{-std::sin(e.heading), std::cos(e.heading)};
    return e.position + normal * lateral;
  }

  double heading_at(double station) const {
    return path.spline.eval(std::clamp(station, 0.0, path.spline.length())).heading;
  }
};

struct EgoState {
  geom::Point2 position;
  double heading = 0.0;
  double speed = 0.0;
  double accel = 0.0;      // last command
  double curvature = 0.0;  // last command
};

struct ActorState {
  int id = 0;
  ActorKind kind = ActorKind::Cyclist;
  double station = 0.0;
  double lateral = 0.0;
  double speed = 0.0;
  double length = 0.0;
  double width = 0.0;
  bool present = false;
};

struct SimState {
  double t = 0.0;
  EgoState ego;
  std::vector<ActorState> actors;
  std::vector<scene::TrafficLight> lights;  // one per world signal
};

struct EgoCommand {
  double accel = 0.0;
  double curvature = 0.0;
};

inline void refresh_scripted(const World& world, SimState& s) {
  for (std::size_t i = 0; i < s.actors.size(); ++i) {
    const auto& script = world.actors[i];
    s.actors[i].present =
        s.t + 1e-9 >= script.appear_at && !(script.vanish_at && s.t + 1e-9 >= *script.vanish_at);
  }
  s.lights.resize(world.signals.size());
  for (std::size_t i = 0; i < world.signals.size(); ++i) s.lights[i] = world.signals[i].light_at(s.t);
}

inline SimState initial_state(const World& world, double ego_station, double ego_lateral,
                              double ego_speed) {
  SimState s;
  s.ego.position = world.point_at(ego_station, ego_lateral);
  s.ego.heading = world.heading_at(ego_station);
  s.ego.speed = ego_speed;
  for (const auto& a : world.actors) {
    s.actors.push_back({a.id, a.kind, a.station, a.lateral, a.speed, a.length, a.width, false});
  }
  refresh_scripted(world, s);
  return s;
}

/// Advances the ego (kinematic unicycle with curvature input, exact arc
/// integration), the scripted actors and the signal clocks by `dt`.
inline SimState step(const World& world, const SimState& state, const EgoCommand& cmd, double dt) {
  if (!(dt > 0.0)) throw SimError("dt must be positive");
  if (!std::isfinite(cmd.accel) || std::abs(cmd.accel) > kMaxAccelCommand + 1e-9) {
    throw CommandBoundsError("acceleration command " + std::to_string(cmd.accel) +
                             " outside +/-" + std::to_string(kMaxAccelCommand));
  }
  if (!std::isfinite(cmd.curvature) || std::abs(cmd.curvature) > kMaxCurvatureCommand + 1e-9) {
    throw CommandBoundsError("curvature command " + std::to_string(cmd.curvature) +
                             " outside +/-" + std::to_string(kMaxCurvatureCommand));
  }
  SimState next = state;
  auto& e = next.ego;
  const double v = state.ego.speed;
  double ds = v * dt + 0.5 * cmd.accel * dt * dt;
  double v_next = v + cmd.accel * dt;
  if (v_next < 0.0) {
    ds = cmd.accel < 0.0 ? v * v / (-2.0 * cmd.accel) : 0.0;
    v_next = 0.0;
  }
  const double h = state.ego.heading;
  const double k = cmd.curvature;
  if (std::abs(k) < 1e-12) {
    e.position = state.ego.position + geom::Point2{std::cos(h), std::sin(h)} * ds;
  } else {
    const double h2 = h + k * ds;
    e.position = state.ego.position +
                 geom::Point2{(std::sin(h2) - std::sin(h)) / k, (std::cos(h) - std::cos(h2)) / k};
  }
  e.heading = h + k * ds;
  e.speed = v_next;
  e.accel = cmd.accel;
  e.curvature = k;

  for (auto& a : next.actors) {
    if (a.present) a.station += a.speed * dt;
  }
  next.t = state.t + dt;
  refresh_scripted(world, next);
  return next;
}

// ---------------------------------------------------------------------------
// Sensing

inline geom::FrenetPose ego_frenet(const World& world, const SimState& s,
                                   std::optional<double> hint = std::nullopt) {
  if (hint) return geom::project_frenet(world.path.spline, s.ego.position, *hint, 10.0);
  return geom::project_frenet(world.path.spline, s.ego.position);
}

/// Nearest present actor in the ego's corridor ahead, bumper to bumper.
struct RangeReading {
  int actor_id = 0;
  double gap = 0.0;
  double closing_speed = 0.0;
};

inline std::optional<RangeReading> range_sensor(const World& world, const SimState& s,
                                                const geom::FrenetPose& ego) {
  constexpr double kCorridorMargin = 0.2;
  std::optional<RangeReading> best;
  const double along = s.ego.speed * std::cos(s.ego.heading - world.heading_at(ego.station));
  for (const auto& a : s.actors) {
    if (!a.present) continue;
    const double lateral_gap = std::abs(a.lateral - ego.lateral) -
                               0.5 * (world.ego_size.width + a.width);
    if (lateral_gap > kCorridorMargin) continue;
    const double gap = a.station - ego.station - 0.5 * (world.ego_size.length + a.length);
    if (a.station < ego.station) continue;
    if (!best || gap < best->gap) best = RangeReading{a.id, gap, along - a.speed};
  }
  return best;
}

/// Ground truth in view of the ego, as the describer would see it.
inline scene::SceneTruth scene_truth(const World& world, const SimState& s,
                                     const geom::FrenetPose& ego) {
  using scene::TrafficLight;
  scene::SceneTruth truth;
  const double view = world.view_range;
  const auto in_view = [&](double station) {
    const double d = station - ego.station;
    return d >= 0.0 && d <= view;
  };

  for (double line : world.stop_lines()) {
    if (in_view(line)) {
      truth.intersection_distance = line - ego.station;
      break;
    }
  }
  truth.light = TrafficLight::None;
  for (std::size_t i = 0; i < world.signals.size(); ++i) {
    if (in_view(world.signals[i].station)) {
      truth.light = s.lights[i];
      break;
    }
  }
  for (const auto& sign : world.signs) {
    if (!in_view(sign.station)) continue;
    truth.signs.push_back(sign.kind);
    if (sign.kind == scene::Sign::SpeedLimit && sign.value_mph) {
      truth.speed_limit_sign_mph = *sign.value_mph;
    }
  }

  const auto& seg = world.segment_at(ego.station);
  const double lane = seg.lane_width;
  truth.in_left_lane = ego.lateral > 0.5 * lane;
  switch (seg.left_marking) {
    case geom::MarkingStyle::Dashed: truth.left_marking = scene::LaneMarking::Dashed; break;
    case geom::MarkingStyle::Solid: truth.left_marking = scene::LaneMarking::Solid; break;
    case geom::MarkingStyle::None: break;
  }

  bool original_lane_busy = false;
  for (const auto& a : s.actors) {
    if (!a.present) continue;
    const double d = a.station - ego.station;
    const bool in_original = a.lateral < 0.5 * lane;
    if (a.kind == ActorKind::Cyclist && d >= -10.0 && d <= view) {
      const double shown = d > 0.5 * (world.ego_size.length + a.length) ? d : 0.0;
      if (!truth.cyclist_distance || shown < *truth.cyclist_distance) truth.cyclist_distance = shown;
    }
    if (a.kind == ActorKind::Pedestrian && in_view(a.station)) truth.pedestrian = true;
    if (!in_original && std::abs(d) < 30.0) truth.left_lane_occupied = true;
    if (in_original && d >= -10.0 && d <= view) original_lane_busy = true;
  }
  truth.right_lane_clear = !original_lane_busy;

  for (const auto& [start, end] : world.school_zones()) {
    if (ego.station >= start && ego.station <= end) {
      truth.school_zone_distance_ft = 0.0;
    } else if (in_view(start)) {
      truth.school_zone_distance_ft = meters_to_feet(start - ego.station);
    }
  }
  return truth;
}

}  // namespace regnav::sim
