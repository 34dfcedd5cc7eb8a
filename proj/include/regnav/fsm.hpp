#pragma once

// Rule-based behavior state machine: four superstates, their substates, the
// allowed transitions, candidate generation, and describer prompts.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "regnav/geom.hpp"

namespace regnav::fsm {

enum class Superstate { LaneFollowing, IntersectionHandling, Overtaking, EmergencyStop };

enum class Substate {
  GoStraight,
  CarFollowing,
  TurnRight,
  TurnLeft,
  OvertakeOut,
  OvertakeReturn,
  StoppedAtLine,
  EmergencyBrake,
};

inline constexpr std::array kSuperstates = {Superstate::LaneFollowing,
                                            Superstate::IntersectionHandling,
                                            Superstate::Overtaking, Superstate::EmergencyStop};

inline constexpr std::array kSubstates = {
    Substate::GoStraight,    Substate::CarFollowing,   Substate::TurnRight,
    Substate::TurnLeft,      Substate::OvertakeOut,    Substate::OvertakeReturn,
    Substate::StoppedAtLine, Substate::EmergencyBrake,
};

inline std::string_view name(Superstate s) {
  switch (s) {
    case Superstate::LaneFollowing: return "Lane Following";
    case Superstate::IntersectionHandling: return "Intersection Handling";
    case Superstate::Overtaking: return "Overtaking";
    case Superstate::EmergencyStop: return "Emergency Stop";
  }
  return "";
}

inline std::string_view name(Substate s) {
  switch (s) {
    case Substate::GoStraight: return "Go Straight";
    case Substate::CarFollowing: return "Car Following";
    case Substate::TurnRight: return "Turn Right";
    case Substate::TurnLeft: return "Turn Left";
    case Substate::OvertakeOut: return "Overtake Out";
    case Substate::OvertakeReturn: return "Overtake Return";
    case Substate::StoppedAtLine: return "Stopped At Line";
    case Substate::EmergencyBrake: return "Emergency Brake";
  }
  return "";
}

/// Compact identifiers used in log files.
inline std::string_view code(Superstate s) {
  switch (s) {
    case Superstate::LaneFollowing: return "LaneFollowing";
    case Superstate::IntersectionHandling: return "IntersectionHandling";
    case Superstate::Overtaking: return "Overtaking";
    case Superstate::EmergencyStop: return "EmergencyStop";
  }
  return "";
}

inline std::string_view code(Substate s) {
  switch (s) {
    case Substate::GoStraight: return "GoStraight";
    case Substate::CarFollowing: return "CarFollowing";
    case Substate::TurnRight: return "TurnRight";
    case Substate::TurnLeft: return "TurnLeft";
    case Substate::OvertakeOut: return "OvertakeOut";
    case Substate::OvertakeReturn: return "OvertakeReturn";
    case Substate::StoppedAtLine: return "StoppedAtLine";
    case Substate::EmergencyBrake: return "EmergencyBrake";
  }
  return "";
}

template <typename E, std::size_t N>
std::optional<E> parse_name(std::string_view text, const std::array<E, N>& all) {
  for (E e : all) {
    if (text == name(e) || text == code(e)) return e;
  }
  return std::nullopt;
}

inline bool admissible(Superstate super, Substate sub) {
  using enum Substate;
  switch (super) {
    case Superstate::LaneFollowing: return sub == GoStraight || sub == CarFollowing;
    case Superstate::IntersectionHandling:
      return sub == CarFollowing || sub == TurnRight || sub == TurnLeft || sub == StoppedAtLine;
    case Superstate::Overtaking:
      return sub == OvertakeOut || sub == OvertakeReturn || sub == CarFollowing;
    case Superstate::EmergencyStop: return sub == EmergencyBrake;
  }
  return false;
}

/// Every state name a regulation record may reference: substate names plus
/// superstate names (a superstate name covers all of its substates).
inline std::set<std::string> state_registry() {
  std::set<std::string> names;
  for (auto s : kSuperstates) names.emplace(name(s));
  for (auto s : kSubstates) names.emplace(name(s));
  return names;
}

class TransitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DrivingState {
  Superstate superstate = Superstate::LaneFollowing;
  Substate substate = Substate::GoStraight;
  double entered_at = 0.0;

  DrivingState() = default;
  DrivingState(Superstate super, Substate sub, double t = 0.0)
      : superstate(super), substate(sub), entered_at(t) {
    if (!admissible(super, sub)) {
      throw TransitionError(std::string(name(sub)) + " is not a substate of " +
                            std::string(name(super)));
    }
  }

  bool same_state(const DrivingState& o) const {
    return superstate == o.superstate && substate == o.substate;
  }
  std::string label() const {
    return std::string(code(superstate)) + "/" + std::string(code(substate));
  }
};

struct EmergencyThresholds {
  double ttc_s = 1.5;
  double min_gap_m = 5.0;
};

struct TransitionTable {
  std::set<std::pair<Superstate, Superstate>> allowed;
  double min_dwell_s = 1.0;
  EmergencyThresholds emergency;

  bool allows(Superstate from, Superstate to) const { return allowed.contains({from, to}); }

  /// Superstate pairs from the prompt table plus the emergency edges.
  static TransitionTable standard() {
    using enum Superstate;
    TransitionTable t;
    t.allowed = {
        {LaneFollowing, LaneFollowing},
        {LaneFollowing, IntersectionHandling},
        {LaneFollowing, Overtaking},
        {IntersectionHandling, IntersectionHandling},
        {IntersectionHandling, LaneFollowing},
        {Overtaking, Overtaking},
        {Overtaking, LaneFollowing},
        {Overtaking, IntersectionHandling},
        {EmergencyStop, EmergencyStop},
        {EmergencyStop, LaneFollowing},
    };
    for (auto s : kSuperstates) t.allowed.insert({s, EmergencyStop});
    return t;
  }
};

/// What the FSM needs to know about the route and the ego's place on it.
struct RouteContext {
  std::vector<geom::RouteBranch> next;  // from route_next_segments
  bool has_left_lane = false;
  double lateral_offset = 0.0;      // ego offset from the route centerline
  bool before_stop_line = false;    // an uncrossed stop line lies ahead on this segment
  bool emergency_cleared = false;   // is_emergency() currently false
  double now = 0.0;
};

/// Minimal scene facts the FSM gates on (a view of SceneConditions).
struct Triggers {
  bool intersection_known = false;
  bool actor_ahead = false;
  bool original_lane_clear = false;
};

inline bool turns_ahead(const RouteContext& route, geom::BranchDirection dir) {
  return std::any_of(route.next.begin(), route.next.end(),
                     [&](const auto& b) { return b.direction == dir; });
}

inline bool straight_ahead(const RouteContext& route) {
  return !route.next.empty() &&
         std::all_of(route.next.begin(), route.next.end(), [](const auto& b) {
           return b.direction == geom::BranchDirection::Straight;
         });
}

/// Candidate next states, highest trigger priority first and the self-loop
/// last. Within the minimum dwell time only the self-loop is offered unless
/// `ignore_dwell` is set.
inline std::vector<DrivingState> candidate_next_states(const DrivingState& current,
                                                       const RouteContext& route,
                                                       const Triggers& triggers,
                                                       const TransitionTable& table,
                                                       bool ignore_dwell = false) {
  using enum Superstate;
  using enum Substate;
  std::vector<DrivingState> out;
  const auto offer = [&](Superstate super, Substate sub) {
    if (super == current.superstate && sub == current.substate) return;
    if (!table.allows(current.superstate, super)) return;
    for (const auto& s : out) {
      if (s.superstate == super && s.substate == sub) return;
    }
    out.emplace_back(super, sub, route.now);
  };

  const bool dwelling = !ignore_dwell && current.superstate != EmergencyStop &&
                        route.now - current.entered_at < table.min_dwell_s - 1e-9;
  if (!dwelling) {
    const bool turn_right = turns_ahead(route, geom::BranchDirection::Right);
    const bool turn_left = turns_ahead(route, geom::BranchDirection::Left);
    const bool junction = (turn_right || turn_left) && triggers.intersection_known;

    switch (current.superstate) {
      case LaneFollowing:
        if (junction) {
          if (route.before_stop_line) offer(IntersectionHandling, StoppedAtLine);
          if (turn_right) offer(IntersectionHandling, TurnRight);
          if (turn_left) offer(IntersectionHandling, TurnLeft);
        }
        if (triggers.actor_ahead) {
          if (route.has_left_lane) offer(Overtaking, OvertakeOut);
          offer(LaneFollowing, current.substate == GoStraight ? CarFollowing : GoStraight);
        }
        break;
      case IntersectionHandling:
        if (straight_ahead(route) && !route.before_stop_line) {
          offer(LaneFollowing, GoStraight);
        }
        if (route.before_stop_line) {
          offer(IntersectionHandling, StoppedAtLine);
          if (turn_right) offer(IntersectionHandling, TurnRight);
          if (turn_left) offer(IntersectionHandling, TurnLeft);
        }
        if (triggers.actor_ahead) offer(IntersectionHandling, CarFollowing);
        break;
      case Overtaking:
        if (junction) {
          if (route.before_stop_line) offer(IntersectionHandling, StoppedAtLine);
          if (turn_right) offer(IntersectionHandling, TurnRight);
        }
        if (current.substate == OvertakeOut &&
            (triggers.actor_ahead || triggers.original_lane_clear)) {
          offer(Overtaking, OvertakeReturn);
        }
        if (current.substate == OvertakeReturn && std::abs(route.lateral_offset) < 0.3) {
          offer(LaneFollowing, GoStraight);
        }
        if (current.substate != OvertakeOut && triggers.actor_ahead) {
          offer(Overtaking, CarFollowing);
        }
        break;
      case EmergencyStop:
        if (route.emergency_cleared) offer(LaneFollowing, GoStraight);
        break;
    }
  }
  DrivingState self = current;
  out.push_back(self);
  return out;
}

/// Moves to `selected`. A self-loop keeps the original entry time.
inline DrivingState transition(const DrivingState& current, const DrivingState& selected,
                               double now, const TransitionTable& table) {
  if (!table.allows(current.superstate, selected.superstate)) {
    throw TransitionError("transition " + std::string(name(current.superstate)) + " -> " +
                          std::string(name(selected.superstate)) + " is not allowed");
  }
  if (current.same_state(selected)) return current;
  return DrivingState(selected.superstate, selected.substate, now);
}

class PromptError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline std::string prompt_for(Superstate s) {
  switch (s) {
    case Superstate::LaneFollowing:
      return "Examine the current driving scenario, look out for intersections or obstacle "
             "vehicles.";
    case Superstate::IntersectionHandling:
      return "Examine the current driving scenario, check if the ego vehicle is still facing an "
             "intersection.";
    case Superstate::Overtaking:
      return "Examine the current driving scenario, check nearby lane occupation conditions, and "
             "look out for intersection.";
    case Superstate::EmergencyStop:
      break;
  }
  throw PromptError("Emergency Stop bypasses the scene describer");
}

struct EgoKinematics {
  double speed = 0.0;
  double accel = 0.0;
};

/// Range-only hazard test: time-to-collision or raw gap below threshold.
inline bool is_emergency(const EgoKinematics& /*ego*/, double obstacle_gap, double closing_speed,
                         const EmergencyThresholds& th = {}) {
  constexpr double kEps = 1e-6;
  const double ttc = obstacle_gap / std::max(closing_speed, kEps);
  return ttc < th.ttc_s || obstacle_gap < th.min_gap_m;
}

}  // namespace regnav::fsm
