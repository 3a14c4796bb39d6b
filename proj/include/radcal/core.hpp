#pragma once

// Geometric and kinematic value types shared by every radcal module.
//
// Frames: the vehicle frame has x forward along the thrust axis, y to the
// left, origin at the rear-axle center. The radar frame is the vehicle frame
// rotated counterclockwise by the mounting angle theta. All angles are
// counterclockwise-positive radians.

#include <cmath>
#include <numbers>

#include "radcal/error.hpp"

namespace radcal {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wrap an angle into (-pi, pi]. Values already inside the interval are
/// returned bit-for-bit unchanged.
inline double wrap_pi(double raw) {
  if (!std::isfinite(raw)) {
    throw Error(ErrorKind::Domain, "normalize_angle: non-finite input");
  }
  if (raw > -kPi && raw <= kPi) return raw;
  double r = std::fmod(raw + kPi, kTwoPi);
  if (r <= 0.0) r += kTwoPi;
  return r - kPi;
}

/// An angle whose value is always held in (-pi, pi].
class Angle {
 public:
  constexpr Angle() = default;
  explicit Angle(double radians) : rad_(wrap_pi(radians)) {}

  static Angle from_degrees(double deg) { return Angle(deg2rad(deg)); }

  double rad() const { return rad_; }
  double deg() const { return rad2deg(rad_); }

  Angle operator+(Angle o) const { return Angle(rad_ + o.rad_); }
  Angle operator-(Angle o) const { return Angle(rad_ - o.rad_); }
  Angle operator-() const { return Angle(-rad_); }

  bool operator==(const Angle&) const = default;

 private:
  double rad_ = 0.0;
};

inline Angle normalize_angle(double raw) { return Angle(raw); }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double norm() const { return std::hypot(x, y); }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  /// z-component of the 3D cross product.
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;
};

inline Vec2 rotate(const Vec2& v, double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Radar pose in the vehicle frame.
struct MountPose {
  double x_s = 0.0;  // m, longitudinal offset from rear-axle center
  double y_s = 0.0;  // m, lateral offset
  Angle theta;       // yaw mounting angle
};

/// Vehicle state at the rear-axle center. There is no side-slip, so the
/// velocity is entirely along the vehicle x-axis.
struct EgoState {
  double t = 0.0;         // s
  double speed = 0.0;     // m/s
  double yaw_rate = 0.0;  // rad/s
  Angle heading;
  Vec2 position;          // m, world frame
};

/// Direction of a radar velocity vector in the radar frame (beta).
inline Angle motion_direction(const Vec2& v) {
  if (v.x == 0.0 && v.y == 0.0) {
    throw Error(ErrorKind::Domain, "motion_direction: zero vector has no direction");
  }
  return Angle(std::atan2(v.y, v.x));
}

/// Rigid-body velocity of the sensor point, expressed in the vehicle frame.
inline Vec2 sensor_velocity(double speed, double yaw_rate, const MountPose& mount) {
  return {speed - yaw_rate * mount.y_s, yaw_rate * mount.x_s};
}

inline Vec2 sensor_velocity(const EgoState& ego, const MountPose& mount) {
  return sensor_velocity(ego.speed, ego.yaw_rate, mount);
}

/// Sensor velocity as seen in the radar frame, i.e. what a perfect radar
/// ego-motion estimator would report.
inline Vec2 radar_velocity(const EgoState& ego, const MountPose& mount) {
  return rotate(sensor_velocity(ego, mount), -mount.theta.rad());
}

}  // namespace radcal
