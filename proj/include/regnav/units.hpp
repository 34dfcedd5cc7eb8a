#pragma once

#include <numbers>

namespace regnav {

inline constexpr double kMetersPerFoot = 0.3048;
inline constexpr double kMetersPerMile = 1609.344;
inline constexpr double kMpsPerMph = kMetersPerMile / 3600.0;

constexpr double mph_to_mps(double mph) { return mph * kMpsPerMph; }
constexpr double mps_to_mph(double mps) { return mps / kMpsPerMph; }
constexpr double feet_to_meters(double ft) { return ft * kMetersPerFoot; }
constexpr double meters_to_feet(double m) { return m / kMetersPerFoot; }

inline double wrap_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  while (a > std::numbers::pi) a -= kTwoPi;
  while (a < -std::numbers::pi) a += kTwoPi;
  return a;
}

}  // namespace regnav
