#pragma once

// Dead-reckoned vehicle trajectories from radar motion and the relative
// trajectory error (RTE) over fixed arc-length segments.

#include <cmath>
#include <span>
#include <vector>

#include "radcal/core.hpp"
#include "radcal/error.hpp"
#include "radcal/motion.hpp"

namespace radcal {

struct Pose2 {
  double t = 0.0;
  Vec2 position;
  Angle heading;
};

struct Trajectory {
  std::vector<Pose2> poses;

  std::size_t size() const { return poses.size(); }
};

/// Rear-axle velocity (vehicle frame) implied by a radar-frame velocity.
inline Vec2 rear_axle_velocity(const Vec2& v_radar, double yaw_rate, const MountPose& mount) {
  const Vec2 v_sensor = rotate(v_radar, mount.theta.rad());
  return {v_sensor.x + yaw_rate * mount.y_s, v_sensor.y - yaw_rate * mount.x_s};
}

/// Integrates the rear-axle velocity recovered from each radar motion.
/// Heading advances with the trapezoid of the (debiased) IMU yaw rate and the
/// position step uses the mean of the bracketing velocities along the
/// mid-interval heading. Sparse frames reuse the last usable velocity.
inline Trajectory reconstruct_trajectory(std::span<const MotionEstimate> motions,
                                         const MountPose& mount, std::span<const double> yaw_rates,
                                         Pose2 start = {}) {
  if (motions.size() != yaw_rates.size()) {
    throw Error(ErrorKind::Alignment, "reconstruct_trajectory: one yaw rate per motion required");
  }
  std::size_t usable = 0;
  for (const auto& m : motions) usable += !m.sparse;
  if (usable < 2) {
    throw Error(ErrorKind::InsufficientData, "reconstruct_trajectory: fewer than 2 usable motions");
  }
  // Velocity per frame, bridging sparse frames with the previous usable one
  // (or the first usable one for a sparse prefix).
  std::vector<Vec2> velocity(motions.size());
  std::size_t first = 0;
  while (motions[first].sparse) ++first;
  Vec2 held = rear_axle_velocity(motions[first].v, yaw_rates[first], mount);
  for (std::size_t k = 0; k < motions.size(); ++k) {
    if (!motions[k].sparse) held = rear_axle_velocity(motions[k].v, yaw_rates[k], mount);
    velocity[k] = held;
  }

  Trajectory traj;
  traj.poses.reserve(motions.size());
  double heading = start.heading.rad();
  Vec2 pos = start.position;
  for (std::size_t k = 0; k < motions.size(); ++k) {
    traj.poses.push_back({motions[k].t, pos, Angle(heading)});
    if (k + 1 == motions.size()) break;
    const double dt = motions[k + 1].t - motions[k].t;
    if (!(dt > 0.0)) {
      throw Error(ErrorKind::Validation, "reconstruct_trajectory: timestamps must increase");
    }
    const double dpsi = 0.5 * (yaw_rates[k] + yaw_rates[k + 1]) * dt;
    const Vec2 v = (velocity[k] + velocity[k + 1]) * 0.5;
    pos = pos + rotate(v, heading + 0.5 * dpsi) * dt;
    heading += dpsi;
  }
  return traj;
}

struct RteConfig {
  double segment_length = 50.0;  // m
  bool align_heading = true;
};

/// Per-segment endpoint errors; rte() is their mean.
inline std::vector<double> rte_segments(const Trajectory& estimated, const Trajectory& reference,
                                        const RteConfig& cfg = {}) {
  if (estimated.size() != reference.size() || reference.size() < 2) {
    throw Error(ErrorKind::Domain, "rte: trajectories must share the same, non-trivial time grid");
  }
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (std::abs(estimated.poses[i].t - reference.poses[i].t) > 1e-9) {
      throw Error(ErrorKind::Domain, "rte: trajectory timestamps differ at pose " + std::to_string(i));
    }
  }
  if (!(cfg.segment_length > 0.0)) throw Error(ErrorKind::Domain, "rte: segment length must be > 0");

  std::vector<double> errors;
  std::size_t begin = 0;
  double arc = 0.0;
  for (std::size_t i = 1; i < reference.size(); ++i) {
    arc += (reference.poses[i].position - reference.poses[i - 1].position).norm();
    if (arc < cfg.segment_length) continue;
    const Pose2& r0 = reference.poses[begin];
    const Pose2& e0 = estimated.poses[begin];
    const double rot = cfg.align_heading ? r0.heading.rad() - e0.heading.rad() : 0.0;
    const Vec2 aligned = r0.position + rotate(estimated.poses[i].position - e0.position, rot);
    errors.push_back((aligned - reference.poses[i].position).norm());
    begin = i;
    arc = 0.0;
  }
  if (errors.empty()) {
    throw Error(ErrorKind::Domain, "rte: reference path shorter than one segment");
  }
  return errors;
}

inline double rte(const Trajectory& estimated, const Trajectory& reference, const RteConfig& cfg = {}) {
  const auto errs = rte_segments(estimated, reference, cfg);
  double sum = 0.0;
  for (double e : errs) sum += e;
  return sum / static_cast<double>(errs.size());
}

}  // namespace radcal
