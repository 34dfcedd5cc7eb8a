#pragma once

// Weighted plan cost: legality, safety, comfort and distance-to-goal, and
// the lowest-cost plan selection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "regnav/fsm.hpp"
#include "regnav/geom.hpp"
#include "regnav/regdb.hpp"

namespace regnav::cost {

class CostError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CostWeights {
  double legal = 10.0;
  double safety = 1.0;
  double comfort = 1.0;
  double distance = 1.0;

  void check() const {
    for (double w : {legal, safety, comfort, distance}) {
      if (!std::isfinite(w) || w < 0.0) throw CostError("weights must be finite and >= 0");
    }
    if (legal + safety + comfort + distance <= 0.0) {
      throw CostError("at least one weight must be positive");
    }
  }
};

/// Reference magnitudes that make the motion terms dimensionless.
struct MotionNorms {
  double accel_ref = 3.0;           // m/s^2
  double speed_variance_ref = 4.0;  // (m/s)^2
  double curvature_ref = 0.2;       // 1/m
};

struct CostBreakdown {
  double legal = 0.0;
  double safety = 0.0;
  double comfort = 0.0;
  double distance = 0.0;
  double total = 0.0;
};

struct CandidatePlan {
  std::size_t plan_id = 0;
  fsm::DrivingState current_state;
  fsm::DrivingState next_state;
  geom::Trajectory trajectory;
  regdb::PlanFacts facts;
  std::optional<regdb::LegalityVerdict> verdict;
};

inline regdb::LegalityVerdict evaluate_legality(const regdb::RegulationDatabase& db,
                                                const CandidatePlan& plan,
                                                const scene::SceneConditions& conditions) {
  return regdb::evaluate_legality(db, plan.facts, conditions);
}

/// Binary: zero for a legal plan, `penalty` otherwise, however many records matched.
inline double legality_cost(const regdb::LegalityVerdict& verdict, double penalty = 1.0) {
  if (!(penalty > 0.0)) throw CostError("penalty must be positive");
  return verdict.legal ? 0.0 : penalty;
}

struct MotionStats {
  double mean_abs_accel = 0.0;
  double speed_variance = 0.0;  // population variance
  double max_abs_curvature = 0.0;
};

inline MotionStats motion_stats(const geom::Trajectory& traj) {
  if (traj.samples.size() < 2) throw CostError("trajectory needs at least 2 samples");
  MotionStats m;
  const auto n = static_cast<double>(traj.samples.size());
  double sum_v = 0.0;
  for (const auto& s : traj.samples) {
    m.mean_abs_accel += std::abs(s.accel);
    sum_v += s.speed;
    m.max_abs_curvature = std::max(m.max_abs_curvature, std::abs(s.curvature));
  }
  m.mean_abs_accel /= n;
  const double mean_v = sum_v / n;
  for (const auto& s : traj.samples) m.speed_variance += (s.speed - mean_v) * (s.speed - mean_v);
  m.speed_variance /= n;
  return m;
}

/// Safety averages the normalized acceleration and curvature terms; comfort
/// averages those two plus normalized speed variance.
inline std::pair<double, double> safety_comfort_cost(const geom::Trajectory& traj,
                                                     const MotionNorms& norms = {}) {
  if (!(norms.accel_ref > 0 && norms.speed_variance_ref > 0 && norms.curvature_ref > 0)) {
    throw CostError("normalization constants must be positive");
  }
  const MotionStats m = motion_stats(traj);
  const double a = m.mean_abs_accel / norms.accel_ref;
  const double var = m.speed_variance / norms.speed_variance_ref;
  const double k = m.max_abs_curvature / norms.curvature_ref;
  return {(a + k) / 2.0, (a + var + k) / 3.0};
}

/// Remaining fraction of the way to `goal_station`, clamped to [0, 1].
inline double distance_cost(const geom::Trajectory& traj, double goal_station) {
  if (traj.empty()) throw CostError("empty trajectory");
  const double start = traj.start_station();
  if (!(goal_station > start)) throw CostError("goal station must lie ahead of the plan start");
  const double frac = (goal_station - traj.end_station()) / (goal_station - start);
  return std::clamp(frac, 0.0, 1.0);
}

/// Distance cost with the end station re-projected onto `refpath`.
inline double distance_cost(const geom::Trajectory& traj, const geom::CubicSpline2D& refpath,
                            double goal_station) {
  if (traj.empty()) throw CostError("empty trajectory");
  const double start = geom::project_frenet(refpath, traj.samples.front().position).station;
  const double end = geom::project_frenet(refpath, traj.samples.back().position).station;
  if (!(goal_station > start)) throw CostError("goal station must lie ahead of the plan start");
  return std::clamp((goal_station - end) / (goal_station - start), 0.0, 1.0);
}

inline double total_cost(const CostWeights& w, const CostBreakdown& c) {
  return w.legal * c.legal + w.safety * c.safety + w.comfort * c.comfort + w.distance * c.distance;
}

/// Fills in `total` from the four components.
inline CostBreakdown with_total(const CostWeights& w, CostBreakdown c) {
  c.total = total_cost(w, c);
  return c;
}

using Evaluation = std::pair<CandidatePlan, CostBreakdown>;

/// Lowest total wins; equal totals go to the lowest plan_id.
inline const CandidatePlan& select_plan(std::span<const Evaluation> evaluations) {
  if (evaluations.empty()) throw CostError("no candidate plans to select from");
  const Evaluation* best = &evaluations.front();
  for (const auto& e : evaluations) {
    if (e.second.total < best->second.total ||
        (e.second.total == best->second.total && e.first.plan_id < best->first.plan_id)) {
      best = &e;
    }
  }
  return best->first;
}

}  // namespace regnav::cost
