#pragma once

// Scene describer boundary. A scripted describer renders ground truth into
// canonical sentences; the parser turns any describer text into
// SceneConditions. A live model would plug in behind the same text contract.

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "regnav/fsm.hpp"
#include "regnav/geom.hpp"

namespace regnav::scene {

enum class TrafficLight { Unknown, None, Red, Green, Yellow };
enum class Sign { Stop, RoadWork, EndRoadWork, NoTurnOnRed, StopHereOnRed, SchoolZone, SpeedLimit };
enum class LaneMarking { Unknown, Dashed, Solid };

inline constexpr std::array kSigns = {Sign::Stop,          Sign::RoadWork,   Sign::EndRoadWork,
                                      Sign::NoTurnOnRed,   Sign::StopHereOnRed,
                                      Sign::SchoolZone,    Sign::SpeedLimit};

inline std::string_view to_string(Sign s) {
  switch (s) {
    case Sign::Stop: return "stop";
    case Sign::RoadWork: return "road_work";
    case Sign::EndRoadWork: return "end_road_work";
    case Sign::NoTurnOnRed: return "no_turn_on_red";
    case Sign::StopHereOnRed: return "stop_here_on_red";
    case Sign::SchoolZone: return "school_zone";
    case Sign::SpeedLimit: return "speed_limit";
  }
  return "";
}

inline std::optional<Sign> sign_from_string(std::string_view s) {
  for (Sign k : kSigns) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline std::string_view to_string(TrafficLight l) {
  switch (l) {
    case TrafficLight::Unknown: return "unknown";
    case TrafficLight::None: return "none";
    case TrafficLight::Red: return "red";
    case TrafficLight::Green: return "green";
    case TrafficLight::Yellow: return "yellow";
  }
  return "unknown";
}

/// Forward range assumed when a sentence reports an element without a distance.
inline constexpr double kDefaultViewRange = 60.0;

/// Structured facts about the scene. Absent optionals and the Unknown enum
/// values mean "not observed"; they are never filled with benign defaults.
struct SceneConditions {
  std::optional<double> intersection_ahead;  // m
  TrafficLight traffic_light = TrafficLight::Unknown;
  std::set<Sign> signs;
  std::optional<double> posted_speed_limit;  // mph, present iff SpeedLimit in signs
  std::optional<double> cyclist_ahead;       // m, 0 when alongside
  std::optional<bool> pedestrian_present;
  std::optional<bool> adjacent_left_lane_occupied;
  std::optional<bool> right_lane_clear;      // lane being returned to after a pass
  LaneMarking lane_marking_left = LaneMarking::Unknown;
  std::optional<double> school_zone_ahead;   // ft to zone start, 0 inside
  std::optional<bool> bicycle_lane;
  std::optional<geom::RoadType> road_type;   // from the map, never from text
  double observed_at = 0.0;

  // Observation time of every known field, indexed like field_count().
  std::vector<double> field_times;
  // Sentences the parser did not recognize.
  std::vector<std::string> unparsed;

  /// Field-wise equality, ignoring timestamps and diagnostics.
  bool same_facts(const SceneConditions& o) const {
    return intersection_ahead == o.intersection_ahead && traffic_light == o.traffic_light &&
           signs == o.signs && posted_speed_limit == o.posted_speed_limit &&
           cyclist_ahead == o.cyclist_ahead && pedestrian_present == o.pedestrian_present &&
           adjacent_left_lane_occupied == o.adjacent_left_lane_occupied &&
           right_lane_clear == o.right_lane_clear && lane_marking_left == o.lane_marking_left &&
           school_zone_ahead == o.school_zone_ahead && bicycle_lane == o.bicycle_lane &&
           road_type == o.road_type;
  }
};

namespace detail {

// One entry per independently-merged fact. Each sign kind is its own field;
// the posted limit travels with the speed-limit sign.
struct FieldOps {
  std::string_view name;
  std::function<bool(const SceneConditions&)> known;
  std::function<void(SceneConditions&, const SceneConditions&)> copy;
  std::function<void(SceneConditions&)> clear;
};

inline const std::vector<FieldOps>& field_ops() {
  static const std::vector<FieldOps> ops = [] {
    std::vector<FieldOps> v;
    const auto optional_field = [&](std::string_view name, auto member) {
      v.push_back({name, [member](const SceneConditions& c) { return (c.*member).has_value(); },
                   [member](SceneConditions& d, const SceneConditions& s) { d.*member = s.*member; },
                   [member](SceneConditions& d) { (d.*member).reset(); }});
    };
    optional_field("intersection_ahead", &SceneConditions::intersection_ahead);
    v.push_back({"traffic_light",
                 [](const SceneConditions& c) { return c.traffic_light != TrafficLight::Unknown; },
                 [](SceneConditions& d, const SceneConditions& s) {
                   d.traffic_light = s.traffic_light;
                 },
                 [](SceneConditions& d) { d.traffic_light = TrafficLight::Unknown; }});
    for (Sign k : kSigns) {
      v.push_back({to_string(k), [k](const SceneConditions& c) { return c.signs.contains(k); },
                   [k](SceneConditions& d, const SceneConditions& s) {
                     d.signs.insert(k);
                     if (k == Sign::SpeedLimit) d.posted_speed_limit = s.posted_speed_limit;
                   },
                   [k](SceneConditions& d) {
                     d.signs.erase(k);
                     if (k == Sign::SpeedLimit) d.posted_speed_limit.reset();
                   }});
    }
    optional_field("cyclist_ahead", &SceneConditions::cyclist_ahead);
    optional_field("pedestrian_present", &SceneConditions::pedestrian_present);
    optional_field("adjacent_left_lane_occupied", &SceneConditions::adjacent_left_lane_occupied);
    optional_field("right_lane_clear", &SceneConditions::right_lane_clear);
    v.push_back({"lane_marking_left",
                 [](const SceneConditions& c) { return c.lane_marking_left != LaneMarking::Unknown; },
                 [](SceneConditions& d, const SceneConditions& s) {
                   d.lane_marking_left = s.lane_marking_left;
                 },
                 [](SceneConditions& d) { d.lane_marking_left = LaneMarking::Unknown; }});
    optional_field("school_zone_ahead", &SceneConditions::school_zone_ahead);
    optional_field("bicycle_lane", &SceneConditions::bicycle_lane);
    optional_field("road_type", &SceneConditions::road_type);
    return v;
  }();
  return ops;
}

}  // namespace detail

inline std::size_t field_count() { return detail::field_ops().size(); }

/// Time at which field `i` was observed; falls back to observed_at.
inline double field_time(const SceneConditions& c, std::size_t i) {
  return i < c.field_times.size() ? c.field_times[i] : c.observed_at;
}

/// Stamps every known field with `t`.
inline void stamp(SceneConditions& c, double t) {
  c.observed_at = t;
  c.field_times.assign(field_count(), t);
}

/// Fresh known fields win; prior known fields survive only while
/// `now - observed <= staleness_window`, otherwise they revert to unknown.
inline SceneConditions merge_conditions(const SceneConditions& prior, const SceneConditions& fresh,
                                        double now, double staleness_window) {
  const auto& ops = detail::field_ops();
  SceneConditions out;
  out.field_times.assign(ops.size(), 0.0);
  out.observed_at = fresh.observed_at;
  out.unparsed = fresh.unparsed;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (ops[i].known(fresh)) {
      ops[i].copy(out, fresh);
      out.field_times[i] = field_time(fresh, i);
    } else if (ops[i].known(prior) && now - field_time(prior, i) <= staleness_window) {
      ops[i].copy(out, prior);
      out.field_times[i] = field_time(prior, i);
    } else {
      ops[i].clear(out);
    }
  }
  return out;
}

/// Canonical lowercase phrases for every known fact; regulation condition
/// keywords are matched against these by phrase containment.
inline std::vector<std::string> keyword_view(const SceneConditions& c) {
  std::vector<std::string> out;
  if (c.intersection_ahead) out.emplace_back("intersection ahead");
  switch (c.traffic_light) {
    case TrafficLight::Red: out.emplace_back("red signal"); break;
    case TrafficLight::Green: out.emplace_back("green signal"); break;
    case TrafficLight::Yellow: out.emplace_back("yellow signal"); break;
    case TrafficLight::None: out.emplace_back("no signal"); break;
    case TrafficLight::Unknown: break;
  }
  for (Sign s : c.signs) {
    switch (s) {
      case Sign::Stop: out.emplace_back("stop sign"); break;
      case Sign::RoadWork: out.emplace_back("road work ahead"); break;
      case Sign::EndRoadWork: out.emplace_back("end road work"); break;
      case Sign::NoTurnOnRed: out.emplace_back("no turn on red"); break;
      case Sign::StopHereOnRed: out.emplace_back("stop here on red"); break;
      case Sign::SchoolZone: out.emplace_back("school zone sign"); break;
      case Sign::SpeedLimit: out.emplace_back("speed limit sign"); break;
    }
  }
  if (c.cyclist_ahead) out.emplace_back("cyclist ahead");
  if (c.pedestrian_present == true) out.emplace_back("pedestrian");
  if (c.adjacent_left_lane_occupied) {
    out.emplace_back(*c.adjacent_left_lane_occupied ? "left lane occupied" : "left lane clear");
  }
  if (c.right_lane_clear) {
    out.emplace_back(*c.right_lane_clear ? "right lane clear" : "right lane occupied");
  }
  if (c.lane_marking_left == LaneMarking::Dashed) out.emplace_back("dashed left lane marking");
  if (c.lane_marking_left == LaneMarking::Solid) out.emplace_back("solid left lane marking");
  if (c.school_zone_ahead) out.emplace_back("school zone");
  if (c.bicycle_lane == true) out.emplace_back("bicycle lane");
  if (c.road_type) {
    std::string r = geom::to_string(*c.road_type);
    std::transform(r.begin(), r.end(), r.begin(), [](unsigned char ch) { return std::tolower(ch); });
    out.push_back(std::move(r));
  }
  return out;
}

struct DescriberResponse {
  std::string text;
  double produced_at = 0.0;
  std::string prompt_used;
};

/// Ground truth visible from the ego, extracted by the simulator.
struct SceneTruth {
  std::optional<double> intersection_distance;  // m to the stop line or junction
  TrafficLight light = TrafficLight::None;
  std::vector<Sign> signs;                      // physical signs in view, true classes
  std::optional<double> speed_limit_sign_mph;   // value on a visible limit sign
  std::optional<double> cyclist_distance;       // longitudinal, negative when alongside
  bool pedestrian = false;
  bool left_lane_occupied = false;
  bool right_lane_clear = false;
  bool in_left_lane = false;                    // ego is out of its original lane
  LaneMarking left_marking = LaneMarking::Unknown;
  std::optional<double> school_zone_distance_ft;
  bool bicycle_lane = false;
};

/// Describer failure modes. Each flag rewrites one visible sign class.
struct Misdetection {
  bool end_road_work_as_road_work = false;
  bool stop_here_on_red_as_stop = false;
  double probability = 1.0;
  std::uint64_t seed = 0;

  bool any() const { return end_road_work_as_road_work || stop_here_on_red_as_stop; }
};

/// Which element classes each prompt asks about.
struct PromptScope {
  bool intersection = true;
  bool lights = true;
  bool signs = true;
  bool cyclist = true;
  bool pedestrian = true;
  bool lane_occupancy = false;
  bool lane_marking = true;
  bool school_zone = true;
  bool bicycle_lane = true;
};

inline PromptScope scope_for_prompt(std::string_view prompt) {
  PromptScope s;
  if (prompt == fsm::prompt_for(fsm::Superstate::IntersectionHandling)) {
    s.lane_marking = false;
    s.bicycle_lane = false;
  } else if (prompt == fsm::prompt_for(fsm::Superstate::Overtaking)) {
    s.lane_occupancy = true;
    s.pedestrian = false;
    s.bicycle_lane = false;
  }
  return s;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline bool misdetect_draw(const Misdetection& m, double t, Sign s) {
  if (m.probability >= 1.0) return true;
  if (m.probability <= 0.0) return false;
  const std::uint64_t h = splitmix64(m.seed ^ std::bit_cast<std::uint64_t>(t) ^
                                     (static_cast<std::uint64_t>(s) << 56));
  return static_cast<double>(h >> 11) * 0x1.0p-53 < m.probability;
}

inline long rounded(double v) { return std::lround(v); }

}  // namespace detail

inline std::string sign_sentence(Sign s) {
  switch (s) {
    case Sign::Stop: return "There is a visible stop sign.";
    case Sign::RoadWork: return "There is a visible warning sign: Road Work Ahead.";
    case Sign::EndRoadWork: return "There is a visible warning sign: End Road Work.";
    case Sign::NoTurnOnRed: return "There is a visible sign: No Turn On Red.";
    case Sign::StopHereOnRed: return "There is a visible sign: Stop Here On Red.";
    case Sign::SchoolZone: return "There is a visible school zone sign.";
    case Sign::SpeedLimit: break;
  }
  return {};
}

/// Scripted stand-in for the vision-language describer. Emits one canonical
/// sentence per element the prompt asks about; deterministic in its inputs.
inline DescriberResponse describe_scripted(const SceneTruth& truth, const std::string& prompt,
                                           double t, const Misdetection& mis = {}) {
  const PromptScope scope = scope_for_prompt(prompt);
  std::vector<std::string> s;

  if (scope.intersection && truth.intersection_distance) {
    s.push_back(fmt::format("Ego vehicle is approaching an intersection, about {} meters ahead.",
                            detail::rounded(*truth.intersection_distance)));
  }
  if (scope.lights) {
    switch (truth.light) {
      case TrafficLight::Red: s.emplace_back("There is a visible red traffic light in sight."); break;
      case TrafficLight::Green: s.emplace_back("There is a visible green traffic light in sight."); break;
      case TrafficLight::Yellow: s.emplace_back("There is a visible yellow traffic light in sight."); break;
      default: break;
    }
  }
  if (scope.signs) {
    std::set<Sign> seen;
    for (Sign sign : truth.signs) {
      if (sign == Sign::SpeedLimit) continue;
      Sign reported = sign;
      if (sign == Sign::EndRoadWork && mis.end_road_work_as_road_work &&
          detail::misdetect_draw(mis, t, sign)) {
        reported = Sign::RoadWork;
      }
      if (sign == Sign::StopHereOnRed && mis.stop_here_on_red_as_stop &&
          detail::misdetect_draw(mis, t, sign)) {
        reported = Sign::Stop;
      }
      if (seen.insert(reported).second) s.push_back(sign_sentence(reported));
    }
    if (truth.speed_limit_sign_mph) {
      s.push_back(fmt::format("The speed limit sign indicates {} mph maximum speed.",
                              detail::rounded(*truth.speed_limit_sign_mph)));
    }
  }
  if (scope.school_zone && truth.school_zone_distance_ft) {
    if (*truth.school_zone_distance_ft <= 0.0) {
      s.emplace_back("The ego vehicle is inside a school zone.");
    } else {
      s.push_back(fmt::format("A school zone begins about {} feet ahead.",
                              detail::rounded(*truth.school_zone_distance_ft)));
    }
  }
  if (scope.cyclist && truth.cyclist_distance) {
    if (*truth.cyclist_distance > 0.0) {
      s.push_back(fmt::format("There is a cyclist ahead, about {} meters away.",
                              detail::rounded(*truth.cyclist_distance)));
    } else {
      s.emplace_back("There is a cyclist next to the ego vehicle.");
    }
  }
  if (scope.pedestrian && truth.pedestrian) {
    s.emplace_back(
        "The intersection appears to have pedestrian crossing, the ego vehicle should stay alert "
        "and yield to pedestrians.");
  }
  if (scope.lane_marking && truth.left_marking != LaneMarking::Unknown) {
    s.emplace_back(truth.left_marking == LaneMarking::Dashed ? "The left lane marking is dashed."
                                                             : "The left lane marking is solid.");
  }
  if (scope.lane_occupancy) {
    s.emplace_back(truth.left_lane_occupied ? "The adjacent left lane is occupied."
                                            : "The adjacent left lane is clear.");
    if (truth.in_left_lane) {
      s.emplace_back(truth.right_lane_clear ? "The right lane beside the ego vehicle is clear."
                                            : "The right lane beside the ego vehicle is occupied.");
    }
  }
  if (scope.bicycle_lane && truth.bicycle_lane) s.emplace_back("There is a visible bicycle lane.");

  DescriberResponse r;
  r.produced_at = t;
  r.prompt_used = prompt;
  if (s.empty()) {
    r.text = "No regulation-relevant elements detected.";
  } else {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) r.text += ' ';
      r.text += s[i];
    }
  }
  return r;
}

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Splits on '.', '!', '?' or an ellipsis when followed by whitespace or end of
// text, so decimals such as "2.5" stay inside their sentence.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    bool boundary = false;
    std::size_t skip = 0;
    if (c == '.' || c == '!' || c == '?') {
      boundary = i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])) ||
                 text[i + 1] == '.';
    } else if (text.substr(i, 3) == "\xE2\x80\xA6") {  // U+2026
      boundary = true;
      skip = 2;
    }
    if (boundary) {
      cur += c == '.' || c == '!' || c == '?' ? std::string(1, c) : std::string();
      if (auto t = trim(cur); !t.empty()) out.push_back(std::move(t));
      cur.clear();
      i += skip;
      while (i + 1 < text.size() && text[i + 1] == '.') ++i;
    } else {
      cur += c;
    }
  }
  if (auto t = trim(cur); !t.empty()) out.push_back(std::move(t));
  return out;
}

inline std::optional<double> number_before(const std::string& s, const std::string& unit) {
  const std::regex re("(\\d+(?:\\.\\d+)?)\\s*" + unit);
  std::smatch m;
  if (std::regex_search(s, m, re)) return std::stod(m[1].str());
  return std::nullopt;
}

inline bool has(const std::string& s, std::string_view phrase) {
  return s.find(phrase) != std::string::npos;
}

}  // namespace detail

/// Rule-based, total parser over canonical phrases. Unrecognized sentences
/// go to `unparsed`.
inline SceneConditions parse_response(const DescriberResponse& resp) {
  using detail::has;
  SceneConditions c;
  for (const auto& sentence : detail::split_sentences(resp.text)) {
    const std::string s = detail::lower(sentence);
    bool matched = true;
    if (has(s, "approaching an intersection") || has(s, "facing an intersection")) {
      c.intersection_ahead = detail::number_before(s, "meters").value_or(kDefaultViewRange);
    } else if (has(s, "traffic light")) {
      if (has(s, "red")) c.traffic_light = TrafficLight::Red;
      else if (has(s, "green")) c.traffic_light = TrafficLight::Green;
      else if (has(s, "yellow")) c.traffic_light = TrafficLight::Yellow;
      else matched = false;
    } else if (has(s, "speed limit")) {
      if (auto v = detail::number_before(s, "mph")) {
        c.signs.insert(Sign::SpeedLimit);
        c.posted_speed_limit = *v;
      } else {
        matched = false;
      }
    } else if (has(s, "end road work")) {
      c.signs.insert(Sign::EndRoadWork);
    } else if (has(s, "road work")) {
      c.signs.insert(Sign::RoadWork);
    } else if (has(s, "stop here on red")) {
      c.signs.insert(Sign::StopHereOnRed);
    } else if (has(s, "no turn on red")) {
      c.signs.insert(Sign::NoTurnOnRed);
    } else if (has(s, "stop sign")) {
      c.signs.insert(Sign::Stop);
    } else if (has(s, "school zone sign")) {
      c.signs.insert(Sign::SchoolZone);
    } else if (has(s, "inside a school zone")) {
      c.school_zone_ahead = 0.0;
    } else if (has(s, "school zone")) {
      if (auto v = detail::number_before(s, "feet")) c.school_zone_ahead = *v;
      else matched = false;
    } else if (has(s, "cyclist next to")) {
      c.cyclist_ahead = 0.0;
    } else if (has(s, "cyclist ahead")) {
      c.cyclist_ahead = detail::number_before(s, "meters").value_or(kDefaultViewRange);
    } else if (has(s, "pedestrian")) {
      c.pedestrian_present = true;
    } else if (has(s, "adjacent left lane")) {
      if (has(s, "occupied")) c.adjacent_left_lane_occupied = true;
      else if (has(s, "clear")) c.adjacent_left_lane_occupied = false;
      else matched = false;
    } else if (has(s, "right lane")) {
      if (has(s, "clear")) c.right_lane_clear = true;
      else if (has(s, "occupied")) c.right_lane_clear = false;
      else matched = false;
    } else if (has(s, "lane marking")) {
      if (has(s, "dashed")) c.lane_marking_left = LaneMarking::Dashed;
      else if (has(s, "solid")) c.lane_marking_left = LaneMarking::Solid;
      else matched = false;
    } else if (has(s, "bicycle lane")) {
      c.bicycle_lane = true;
    } else if (has(s, "no regulation-relevant elements")) {
      // explicit empty scene
    } else {
      matched = false;
    }
    if (!matched) c.unparsed.push_back(sentence);
  }
  stamp(c, resp.produced_at);
  return c;
}

/// Single-slot mailbox: the reader always sees the most recent value and
/// older values are dropped, never queued. Safe for one writer and any
/// number of readers.
template <typename T>
class LatestValue {
 public:
  void publish(T value) {
    std::lock_guard lock(mutex_);
    value_ = std::move(value);
    ++version_;
  }
  std::optional<T> latest() const {
    std::lock_guard lock(mutex_);
    return value_;
  }
  std::uint64_t version() const {
    std::lock_guard lock(mutex_);
    return version_;
  }

 private:
  mutable std::mutex mutex_;
  std::optional<T> value_;
  std::uint64_t version_ = 0;
};

}  // namespace regnav::scene
