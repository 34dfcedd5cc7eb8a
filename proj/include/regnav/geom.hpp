#pragma once

// Planar geometry for path generation: natural cubic splines parameterized by
// arc length, Frenet projection, the vector map, and time-sampled trajectories.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "regnav/units.hpp"

namespace regnav::geom {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double k, Point2 p) { return {k * p.x, k * p.y}; }
  friend Point2 operator*(Point2 p, double k) { return {k * p.x, k * p.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a speed profile cannot honor a required stop under the
/// deceleration bound. The planner treats the candidate as invalid.
class InfeasibleTrajectory : public GeometryError {
 public:
  using GeometryError::GeometryError;
};

namespace detail {

// Cubic polynomial pieces of a 1D natural spline over the given knots.
struct SplinePieces {
  std::vector<double> a, b, c, d;
};

inline SplinePieces natural_spline(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size() - 1;
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = t[i + 1] - t[i];

  // Second derivatives M, with M_0 = M_n = 0 (natural end conditions).
  std::vector<double> m(n + 1, 0.0);
  if (n >= 2) {
    const std::size_t k = n - 1;
    std::vector<double> diag(k), upper(k), rhs(k);
    for (std::size_t i = 1; i < n; ++i) {
      diag[i - 1] = 2.0 * (h[i - 1] + h[i]);
      upper[i - 1] = h[i];
      rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    // Thomas algorithm; the system is symmetric so lower == upper shifted.
    for (std::size_t i = 1; i < k; ++i) {
      const double w = upper[i - 1] / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i >= 1; --i) {
      m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
    }
  }

  SplinePieces p;
  p.a.resize(n);
  p.b.resize(n);
  p.c.resize(n);
  p.d.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.a[i] = y[i];
    p.b[i] = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
    p.c[i] = m[i] / 2.0;
    p.d[i] = (m[i + 1] - m[i]) / (6.0 * h[i]);
  }
  return p;
}

template <typename F>
double simpson(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  return (b - a) / 6.0 * (f(a) + 4.0 * f(mid) + f(b));
}

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double whole, double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = simpson(f, a, mid);
  const double right = simpson(f, mid, b);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(f, a, mid, left, tol / 2.0, depth - 1) +
         adaptive_simpson(f, mid, b, right, tol / 2.0, depth - 1);
}

}  // namespace detail

struct SplineSample {
  Point2 position;
  double heading = 0.0;
  double curvature = 0.0;
};

/// Natural cubic spline through planar waypoints. The parameter is arc
/// length: knots start from chord lengths and are re-fit to the integrated
/// arc length until they agree within `kArcLengthTolerance`.
class CubicSpline2D {
 public:
  static constexpr double kArcLengthTolerance = 1e-3;

  CubicSpline2D() = default;

  explicit CubicSpline2D(std::span<const Point2> waypoints) {
    if (waypoints.size() < 2) {
      throw GeometryError("spline needs at least 2 waypoints");
    }
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      if (distance(waypoints[i], waypoints[i - 1]) < 1e-9) {
        throw GeometryError("duplicate consecutive waypoint at index " + std::to_string(i));
      }
    }
    xs_.reserve(waypoints.size());
    ys_.reserve(waypoints.size());
    for (const auto& p : waypoints) {
      xs_.push_back(p.x);
      ys_.push_back(p.y);
    }

    knots_.assign(waypoints.size(), 0.0);
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
      knots_[i] = knots_[i - 1] + distance(waypoints[i], waypoints[i - 1]);
    }
    fit();

    for (int iter = 0; iter < 50; ++iter) {
      std::vector<double> refined(knots_.size(), 0.0);
      double worst = 0.0;
      for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        refined[i + 1] = refined[i] + interval_arc_length(i);
        worst = std::max(worst, std::abs(refined[i + 1] - knots_[i + 1]));
      }
      knots_ = std::move(refined);
      fit();
      if (worst < 0.1 * kArcLengthTolerance) break;
    }
  }

  double length() const { return knots_.empty() ? 0.0 : knots_.back(); }
  const std::vector<double>& knots() const { return knots_; }
  std::size_t size() const { return knots_.size(); }

  Point2 waypoint(std::size_t i) const { return {xs_[i], ys_[i]}; }

  SplineSample eval(double station) const {
    if (!(station >= -1e-9 && station <= length() + 1e-9)) {
      throw GeometryError("station " + std::to_string(station) + " outside [0, " +
                          std::to_string(length()) + "]");
    }
    const auto [i, h] = locate(station);
    const double dx = first(px_, i, h), dy = first(py_, i, h);
    const double ddx = second(px_, i, h), ddy = second(py_, i, h);
    SplineSample s;
    s.position = {value(px_, i, h), value(py_, i, h)};
    s.heading = std::atan2(dy, dx);
    s.curvature = (dx * ddy - dy * ddx) / std::pow(dx * dx + dy * dy, 1.5);
    return s;
  }

  Point2 position(double station) const {
    const auto [i, h] = locate(std::clamp(station, 0.0, length()));
    return {value(px_, i, h), value(py_, i, h)};
  }

  /// Second derivative of (x, y) at knot `k`, taken from the interval on the
  /// left (`from_left`) or on the right.
  Point2 second_derivative_at_knot(std::size_t k, bool from_left) const {
    if (from_left) {
      const std::size_t i = k - 1;
      const double h = knots_[k] - knots_[i];
      return {second(px_, i, h), second(py_, i, h)};
    }
    return {second(px_, k, 0.0), second(py_, k, 0.0)};
  }

 private:
  std::pair<std::size_t, double> locate(double station) const {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), station);
    std::size_t i = it == knots_.begin() ? 0 : static_cast<std::size_t>(it - knots_.begin()) - 1;
    i = std::min(i, knots_.size() - 2);
    return {i, station - knots_[i]};
  }

  static double value(const detail::SplinePieces& p, std::size_t i, double h) {
    return p.a[i] + h * (p.b[i] + h * (p.c[i] + h * p.d[i]));
  }
  static double first(const detail::SplinePieces& p, std::size_t i, double h) {
    return p.b[i] + h * (2.0 * p.c[i] + 3.0 * h * p.d[i]);
  }
  static double second(const detail::SplinePieces& p, std::size_t i, double h) {
    return 2.0 * p.c[i] + 6.0 * h * p.d[i];
  }

  void fit() {
    px_ = detail::natural_spline(knots_, xs_);
    py_ = detail::natural_spline(knots_, ys_);
  }

  double interval_arc_length(std::size_t i) const {
    const auto speed = [&](double h) { return std::hypot(first(px_, i, h), first(py_, i, h)); };
    const double width = knots_[i + 1] - knots_[i];
    return detail::adaptive_simpson(speed, 0.0, width, detail::simpson(speed, 0.0, width), 1e-9,
                                    20);
  }

  std::vector<double> xs_, ys_, knots_;
  detail::SplinePieces px_, py_;
};

struct FrenetPose {
  double station = 0.0;
  double lateral = 0.0;  // left of the path tangent is positive
};

namespace detail {

inline double golden_min(const CubicSpline2D& path, Point2 p, double lo, double hi) {
  const auto f = [&](double s) {
    const Point2 d = path.position(s) - p;
    return dot(d, d);
  };
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-6) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline FrenetPose frenet_at(const CubicSpline2D& path, Point2 p, double station) {
  const SplineSample s = path.eval(station);
  const Point2 tangent{std::cos(s.heading), std::sin(s.heading)};
  const double side = cross(tangent, p - s.position);
  const double dist = distance(p, s.position);
  return {station, side >= 0.0 ? dist : -dist};
}

}  // namespace detail

/// Closest-point projection restricted to stations within `window` of `hint`.
inline FrenetPose project_frenet(const CubicSpline2D& path, Point2 point, double hint,
                                 double window) {
  const double lo = std::max(0.0, hint - window);
  const double hi = std::min(path.length(), hint + window);
  const double step = std::min(0.25, std::max(1e-3, (hi - lo) / 8.0));
  double best = lo, best_d = std::numeric_limits<double>::infinity();
  for (double s = lo;; s += step) {
    const double sc = std::min(s, hi);
    const Point2 d = path.position(sc) - point;
    const double d2 = dot(d, d);
    if (d2 < best_d) {
      best_d = d2;
      best = sc;
    }
    if (sc >= hi) break;
  }
  const double station =
      detail::golden_min(path, point, std::max(lo, best - step), std::min(hi, best + step));
  return detail::frenet_at(path, point, station);
}

/// Closest-point projection over the whole path.
inline FrenetPose project_frenet(const CubicSpline2D& path, Point2 point) {
  return project_frenet(path, point, 0.5 * path.length(), path.length());
}

// ---------------------------------------------------------------------------
// Vector map

enum class BranchDirection { Straight, Left, Right };
enum class RoadType { Highway, Residential, Freeway };
enum class ZoneKind { SchoolZone, StopLine };
enum class MarkingStyle { None, Dashed, Solid };

inline std::string to_string(BranchDirection b) {
  switch (b) {
    case BranchDirection::Straight: return "straight";
    case BranchDirection::Left: return "left";
    case BranchDirection::Right: return "right";
  }
  return "straight";
}

inline std::string to_string(RoadType r) {
  switch (r) {
    case RoadType::Highway: return "Highway";
    case RoadType::Residential: return "Residential";
    case RoadType::Freeway: return "Freeway";
  }
  return "Highway";
}

inline std::string to_string(MarkingStyle m) {
  switch (m) {
    case MarkingStyle::None: return "none";
    case MarkingStyle::Dashed: return "dashed";
    case MarkingStyle::Solid: return "solid";
  }
  return "";
}

inline std::string to_string(ZoneKind z) {
  return z == ZoneKind::SchoolZone ? "school_zone" : "stop_line";
}

/// Zone on a segment, in segment-local station. A stop line has start == end.
struct Zone {
  ZoneKind kind = ZoneKind::SchoolZone;
  double start = 0.0;
  double end = 0.0;
};

struct RoadSegment {
  std::string id;
  std::vector<Point2> centerline;
  double lane_width = 3.7;
  double speed_limit_mph = 35.0;
  RoadType road_type = RoadType::Highway;
  std::vector<std::string> successors;
  BranchDirection branch_direction = BranchDirection::Straight;
  std::vector<Zone> zones;
  std::optional<std::string> left_neighbor;  // same-direction lane to the left
  MarkingStyle left_marking = MarkingStyle::None;
};

struct VectorMap {
  std::vector<RoadSegment> segments;

  const RoadSegment* find(const std::string& id) const {
    for (const auto& s : segments) {
      if (s.id == id) return &s;
    }
    return nullptr;
  }

  const RoadSegment& at(const std::string& id) const {
    if (const auto* s = find(id)) return *s;
    throw GeometryError("unknown segment id '" + id + "'");
  }

  /// Returns a list of human-readable problems; empty when the map is sound.
  std::vector<std::string> validate() const {
    std::vector<std::string> problems;
    for (const auto& s : segments) {
      if (s.centerline.size() < 2) problems.push_back(s.id + ": fewer than 2 waypoints");
      for (std::size_t i = 1; i < s.centerline.size(); ++i) {
        if (distance(s.centerline[i], s.centerline[i - 1]) < 1e-9) {
          problems.push_back(s.id + ": duplicate waypoint " + std::to_string(i));
        }
      }
      for (const auto& succ : s.successors) {
        if (!find(succ)) problems.push_back(s.id + ": unknown successor " + succ);
      }
      if (s.left_neighbor && !find(*s.left_neighbor)) {
        problems.push_back(s.id + ": unknown left neighbor " + *s.left_neighbor);
      }
    }
    return problems;
  }
};

struct RouteBranch {
  std::string segment_id;
  BranchDirection direction = BranchDirection::Straight;
  friend bool operator==(const RouteBranch&, const RouteBranch&) = default;
};

/// Successors of `current` in map adjacency that the route continues onto.
inline std::vector<RouteBranch> route_next_segments(const VectorMap& map,
                                                    const std::string& current,
                                                    std::span<const std::string> route) {
  const RoadSegment& seg = map.at(current);
  if (std::find(route.begin(), route.end(), current) == route.end()) {
    throw GeometryError("segment '" + current + "' is not on the route");
  }
  std::vector<RouteBranch> out;
  for (const auto& succ : seg.successors) {
    if (std::find(route.begin(), route.end(), succ) == route.end()) continue;
    out.push_back({succ, map.at(succ).branch_direction});
  }
  return out;
}

/// A route flattened into a single reference spline, with the station at
/// which each segment begins.
struct RoutePath {
  CubicSpline2D spline;
  std::vector<std::string> segment_ids;
  std::vector<double> segment_start;  // station of each segment's first waypoint
  std::vector<double> segment_end;

  std::size_t segment_index_at(double station) const {
    for (std::size_t i = segment_ids.size(); i-- > 0;) {
      if (station >= segment_start[i]) return i;
    }
    return 0;
  }
};

inline RoutePath build_route_path(const VectorMap& map, std::span<const std::string> route) {
  if (route.empty()) throw GeometryError("empty route");
  std::vector<Point2> pts;
  std::vector<std::size_t> first_index;
  for (const auto& id : route) {
    const RoadSegment& seg = map.at(id);
    std::size_t start = pts.size();
    for (const auto& p : seg.centerline) {
      if (!pts.empty() && distance(pts.back(), p) < 1e-6) {
        start = std::min(start, pts.size() - 1);
        continue;
      }
      pts.push_back(p);
    }
    first_index.push_back(start);
  }
  RoutePath rp{CubicSpline2D(pts), {route.begin(), route.end()}, {}, {}};
  for (std::size_t i = 0; i < route.size(); ++i) {
    rp.segment_start.push_back(rp.spline.knots()[first_index[i]]);
  }
  for (std::size_t i = 0; i < route.size(); ++i) {
    rp.segment_end.push_back(i + 1 < route.size() ? rp.segment_start[i + 1] : rp.spline.length());
  }
  return rp;
}

// ---------------------------------------------------------------------------
// Trajectories

struct TrajectorySample {
  double t = 0.0;
  Point2 position;
  double heading = 0.0;
  double speed = 0.0;
  double accel = 0.0;  // held constant over [t, t + dt)
  double curvature = 0.0;
  double station = 0.0;
  double lateral = 0.0;  // reference offset, 0 without a reference
};

struct Trajectory {
  CubicSpline2D path;
  std::vector<TrajectorySample> samples;

  bool empty() const { return samples.empty(); }
  double start_station() const { return samples.front().station; }
  double end_station() const { return samples.back().station; }
  double max_speed() const {
    double v = 0.0;
    for (const auto& s : samples) v = std::max(v, s.speed);
    return v;
  }
};

struct StartState {
  Point2 position;
  double heading = 0.0;
  double speed = 0.0;
};

struct MotionLimits {
  double speed_limit_mph = 35.0;
  double max_accel = 2.0;  // m/s^2
  double max_decel = 3.0;  // m/s^2, positive
};

/// Extra longitudinal constraints in path arc length (meters from the start).
struct ProfileConstraints {
  struct Cap {
    double from = 0.0;
    double to = std::numeric_limits<double>::infinity();
    double speed_mps = 0.0;
  };
  std::vector<Cap> caps;
  std::optional<double> stop_at;
  bool stop_at_end = false;
};

inline constexpr double kTrajectoryDt = 0.1;

/// Path through `start` then `waypoints`, with a speed profile that moves
/// toward the limit under the acceleration bounds and comes to rest at any
/// required stop. Station is the reference projection when `reference` is
/// given, otherwise arc length from the start plus `station_offset`.
inline Trajectory generate_trajectory(const StartState& start, std::span<const Point2> waypoints,
                                      const MotionLimits& limits, double horizon,
                                      const ProfileConstraints& constraints = {},
                                      const CubicSpline2D* reference = nullptr,
                                      double station_offset = 0.0) {
  if (!(limits.speed_limit_mph > 0 && limits.max_accel > 0 && limits.max_decel > 0)) {
    throw GeometryError("motion limits must be positive");
  }
  std::vector<Point2> pts;
  pts.reserve(waypoints.size() + 1);
  pts.push_back(start.position);
  for (const auto& p : waypoints) {
    if (distance(p, pts.back()) > 1e-6) pts.push_back(p);
  }

  Trajectory traj{CubicSpline2D(pts), {}};
  const double length = traj.path.length();
  const double v_limit = mph_to_mps(limits.speed_limit_mph);

  std::optional<double> stop = constraints.stop_at;
  if (constraints.stop_at_end) stop = stop ? std::min(*stop, length) : length;
  if (stop) {
    const double reach = std::max(0.0, *stop);
    if (start.speed * start.speed > 2.0 * limits.max_decel * reach + 1e-6) {
      throw InfeasibleTrajectory("cannot stop within " + std::to_string(reach) +
                                 " m from " + std::to_string(start.speed) + " m/s");
    }
  }

  // Backward pass over a fine arc-length grid gives the highest speed from
  // which every downstream cap and stop remains reachable.
  constexpr double kDu = 0.25;
  const auto n = static_cast<std::size_t>(std::ceil(length / kDu)) + 1;
  std::vector<double> target(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double u = static_cast<double>(i) * kDu;
    double v = v_limit;
    for (const auto& cap : constraints.caps) {
      if (u >= cap.from && u < cap.to) v = std::min(v, cap.speed_mps);
    }
    if (stop && u >= *stop) v = 0.0;
    target[i] = v;
  }
  // The pass plans with some braking in reserve so the forward integration,
  // which sees the target one step late, can still meet it.
  constexpr double kPlanBrakeShare = 0.8;
  for (std::size_t i = n; i-- > 0;) {
    target[i] = std::min(target[i], std::sqrt(target[i + 1] * target[i + 1] +
                                              2.0 * kPlanBrakeShare * limits.max_decel * kDu));
  }
  const auto target_at = [&](double u) {
    if (stop && u >= *stop) return 0.0;
    if (u <= 0.0) return target[0];
    const double f = u / kDu;
    const auto i = static_cast<std::size_t>(f);
    if (i >= n) return target[n];
    const double w = f - static_cast<double>(i);
    return (1.0 - w) * target[i] + w * target[i + 1];
  };

  const double dt = kTrajectoryDt;
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  double u = 0.0, v = start.speed, hint = station_offset;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double v_des = target_at(u + v * dt);
    double a = std::clamp((v_des - v) / dt, -limits.max_decel, limits.max_accel);
    if (v + a * dt < 0.0) a = -v / dt;

    const SplineSample s = traj.path.eval(std::min(u, length));
    TrajectorySample out;
    out.t = static_cast<double>(k) * dt;
    out.position = s.position;
    out.heading = s.heading;
    out.curvature = s.curvature;
    out.speed = v;
    out.accel = a;
    if (reference) {
      const FrenetPose fp = project_frenet(*reference, s.position, hint, 5.0 + v * dt);
      out.station = fp.station;
      out.lateral = fp.lateral;
      hint = fp.station;
    } else {
      out.station = station_offset + std::min(u, length);
    }
    traj.samples.push_back(out);

    if (k == steps) break;
    const double du = v * dt + 0.5 * a * dt * dt;
    if (u + du > length + 1e-9) break;  // path exhausted before the horizon
    v = std::max(0.0, v + a * dt);
    if (stop && u + du >= std::max(*stop, u)) {
      // Arrived: the profile rests at the stop from here on.
      u = std::max(*stop, u);
      v = 0.0;
    } else {
      u += du;
    }
  }
  return traj;
}

}  // namespace regnav::geom
