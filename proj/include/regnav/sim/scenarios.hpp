#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "regnav/sim/runner.hpp"
#include "regnav/units.hpp"

namespace regnav::sim {

struct ScenarioInfo {
  std::string name;
  std::vector<std::string> variants;
  std::string summary;
};

inline const std::vector<ScenarioInfo>& scenario_library() {
  static const std::vector<ScenarioInfo> lib{
      {"overtake_cyclist",
       {"default", "solid_line", "misdetect", "emergency"},
       "pass a cyclist on a two-lane highway with a dashed centerline"},
      {"right_turn_on_red",
       {"default", "no_turn_on_red", "misdetect", "emergency"},
       "right turn at a signalized junction that starts red"},
      {"school_zone",
       {"default", "misdetect", "emergency"},
       "straight residential road through a posted school zone"},
  };
  return lib;
}

namespace detail {

inline std::vector<geom::Point2> straight(geom::Point2 from, geom::Point2 to, double spacing) {
  const double len = geom::distance(from, to);
  const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
  std::vector<geom::Point2> pts;
  for (int i = 0; i <= n; ++i) pts.push_back(from + (to - from) * (static_cast<double>(i) / n));
  return pts;
}

inline RunSpec overtake_cyclist(const std::string& variant) {
  geom::VectorMap map;
  geom::RoadSegment main;
  main.id = "main";
  main.centerline = straight({0, 0}, {400, 0}, 50.0);
  main.speed_limit_mph = 35.0;
  main.road_type = geom::RoadType::Highway;
  main.left_neighbor = "main_left";
  main.left_marking = variant == "solid_line" ? geom::MarkingStyle::Solid : geom::MarkingStyle::Dashed;
  geom::RoadSegment left = main;
  left.id = "main_left";
  left.centerline = straight({0, 3.7}, {400, 3.7}, 50.0);
  left.left_neighbor.reset();
  left.left_marking = geom::MarkingStyle::None;
  map.segments = {main, left};

  RunSpec spec;
  spec.world = World(map, {"main"});
  spec.world.actors.push_back({1, ActorKind::Cyclist, 80.0, -1.0, 5.0, 1.8, 0.6});
  spec.world.signs.push_back({scene::Sign::EndRoadWork, 150.0, std::nullopt});
  spec.ego_speed = mph_to_mps(34.5);
  spec.goal_station = 350.0;
  return spec;
}

inline RunSpec right_turn_on_red(const std::string& variant) {
  constexpr double kRadius = 12.0;
  geom::VectorMap map;
  geom::RoadSegment approach;
  approach.id = "approach";
  approach.centerline = straight({0, 0}, {150, 0}, 10.0);
  approach.speed_limit_mph = 30.0;
  approach.road_type = geom::RoadType::Residential;
  approach.successors = {"turn", "cross"};
  approach.zones = {{geom::ZoneKind::StopLine, 150.0, 150.0}};

  geom::RoadSegment turn;
  turn.id = "turn";
  for (int i = 0; i <= 8; ++i) {
    const double th = 0.5 * std::numbers::pi * i / 8.0;
    turn.centerline.push_back({150.0 + kRadius * std::sin(th), -kRadius + kRadius * std::cos(th)});
  }
  turn.speed_limit_mph = 10.0;
  turn.road_type = geom::RoadType::Residential;
  turn.branch_direction = geom::BranchDirection::Right;
  turn.successors = {"exit"};

  geom::RoadSegment cross;
  cross.id = "cross";
  cross.centerline = straight({150, 0}, {300, 0}, 10.0);
  cross.speed_limit_mph = 30.0;
  cross.road_type = geom::RoadType::Residential;

  geom::RoadSegment exit;
  exit.id = "exit";
  exit.centerline = straight({150.0 + kRadius, -kRadius}, {150.0 + kRadius, -kRadius - 150.0}, 10.0);
  exit.speed_limit_mph = 30.0;
  exit.road_type = geom::RoadType::Residential;
  map.segments = {approach, turn, cross, exit};

  RunSpec spec;
  spec.world = World(map, {"approach", "turn", "exit"});
  const double line = spec.world.stop_lines().front();
  spec.world.signals.push_back(
      {1, line, {{scene::TrafficLight::Red, 30.0}, {scene::TrafficLight::Green, 1e9}}, false});
  spec.world.signs.push_back({scene::Sign::StopHereOnRed, line, std::nullopt});
  if (variant == "no_turn_on_red") spec.world.signs.push_back({scene::Sign::NoTurnOnRed, line, std::nullopt});
  spec.ego_station = 20.0;
  spec.ego_speed = mph_to_mps(25.0);
  spec.goal_station = spec.world.path.spline.length() - 30.0;
  return spec;
}

inline RunSpec school_zone(const std::string&) {
  const double marker = 100.0;
  const double zone_start = marker + feet_to_meters(700.0);
  const double zone_end = zone_start + 150.0;
  geom::VectorMap map;
  geom::RoadSegment main;
  main.id = "main";
  main.centerline = straight({0, 0}, {600, 0}, 25.0);
  main.speed_limit_mph = 35.0;
  main.road_type = geom::RoadType::Residential;
  main.zones = {{geom::ZoneKind::SchoolZone, zone_start, zone_end}};
  map.segments = {main};

  RunSpec spec;
  spec.world = World(map, {"main"});
  spec.world.signs = {{scene::Sign::EndRoadWork, 200.0, std::nullopt},
                      {scene::Sign::SchoolZone, zone_start, std::nullopt},
                      {scene::Sign::SpeedLimit, zone_start, 25.0},
                      {scene::Sign::SpeedLimit, zone_end, 35.0}};
  spec.ego_speed = mph_to_mps(35.0);
  spec.goal_station = 560.0;
  return spec;
}

}  // namespace detail

/// Builds a library scenario. Unknown names or variants throw SimError.
inline RunSpec make_scenario(const std::string& name, const std::string& variant = "default",
                             std::uint64_t seed = 0) {
  const ScenarioInfo* info = nullptr;
  for (const auto& s : scenario_library()) {
    if (s.name == name) info = &s;
  }
  if (!info) throw SimError("unknown scenario '" + name + "'");
  if (std::find(info->variants.begin(), info->variants.end(), variant) == info->variants.end()) {
    throw SimError("scenario '" + name + "' has no variant '" + variant + "'");
  }
  RunSpec spec = name == "overtake_cyclist"    ? detail::overtake_cyclist(variant)
                 : name == "right_turn_on_red" ? detail::right_turn_on_red(variant)
                                               : detail::school_zone(variant);
  spec.scenario = name;
  spec.variant = variant;
  spec.seed = seed;
  if (variant == "misdetect") {
    spec.misdetection.end_road_work_as_road_work = true;
    spec.misdetection.stop_here_on_red_as_stop = true;
  }
  if (variant == "emergency") spec.emergency = EmergencyInjection{4.0, 4.0, 3.0};
  return spec;
}

}  // namespace regnav::sim
