#pragma once

// Deterministic synthetic scenarios with known ground truth: a piecewise
// speed / yaw-rate trajectory, radar point clouds rendered from it (static
// world, moving objects, clutter) and an IMU stream following the
// scale/bias/noise yaw-rate model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "radcal/core.hpp"
#include "radcal/error.hpp"
#include "radcal/imu.hpp"
#include "radcal/motion.hpp"

namespace radcal {

/// Linear speed and yaw-rate ramps over one segment.
struct TrajectorySegment {
  double duration = 1.0;  // s
  double speed_start = 0.0;
  double speed_end = 0.0;
  double yaw_rate_start = 0.0;
  double yaw_rate_end = 0.0;
};

/// Vehicle commands over time: an initial stationary hold followed by the
/// segments in order; the final values are held past the last segment.
class TrajectoryProfile {
 public:
  TrajectoryProfile() = default;
  TrajectoryProfile(double stationary_duration, std::vector<TrajectorySegment> segments)
      : stationary_(stationary_duration), segments_(std::move(segments)) {}

  struct Command {
    double speed = 0.0;
    double yaw_rate = 0.0;
    double accel = 0.0;
  };

  Command at(double t) const {
    if (t < stationary_ || segments_.empty()) return {};
    double start = stationary_;
    for (const auto& s : segments_) {
      if (t < start + s.duration) {
        const double a = (t - start) / s.duration;
        return {s.speed_start + a * (s.speed_end - s.speed_start),
                s.yaw_rate_start + a * (s.yaw_rate_end - s.yaw_rate_start),
                (s.speed_end - s.speed_start) / s.duration};
      }
      start += s.duration;
    }
    return {segments_.back().speed_end, segments_.back().yaw_rate_end, 0.0};
  }

  double stationary_duration() const { return stationary_; }
  const std::vector<TrajectorySegment>& segments() const { return segments_; }

 private:
  double stationary_ = 0.0;
  std::vector<TrajectorySegment> segments_;
};

/// Integrates heading and position on a fixed grid t_k = k dt. Heading uses the
/// trapezoid of the yaw rate; position uses the mean speed along the mid-step
/// heading, which is exact for constant-rate arcs up to O((omega dt)^2).
inline std::vector<EgoState> integrate_trajectory(const TrajectoryProfile& profile, double duration,
                                                  double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::Domain, "integrate_trajectory: dt must be > 0");
  const auto steps = static_cast<std::size_t>(std::floor(duration / dt + 1e-9));
  std::vector<EgoState> out;
  out.reserve(steps + 1);
  double heading = 0.0;  // unwrapped
  Vec2 pos;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const auto cmd = profile.at(t);
    out.push_back({t, cmd.speed, cmd.yaw_rate, Angle(heading), pos});
    if (k == steps) break;
    const auto next = profile.at(static_cast<double>(k + 1) * dt);
    const double dpsi = 0.5 * (cmd.yaw_rate + next.yaw_rate) * dt;
    const double mid = heading + 0.5 * dpsi;
    const double ds = 0.5 * (cmd.speed + next.speed) * dt;
    pos = pos + Vec2{std::cos(mid), std::sin(mid)} * ds;
    heading += dpsi;
  }
  return out;
}

enum class DetectionLabel { Static, Mover, Clutter };

inline const char* to_string(DetectionLabel l) {
  switch (l) {
    case DetectionLabel::Static: return "static";
    case DetectionLabel::Mover: return "mover";
    case DetectionLabel::Clutter: return "clutter";
  }
  return "?";
}

/// What one frame contains. Movers are grouped into rigid objects sharing a
/// world velocity; unless `mover_velocities` pins them, each group draws a
/// speed in [mover_speed_min, mover_speed_max] and a uniform heading.
struct Population {
  int statics = 42;
  int movers = 12;
  int mover_groups = 3;
  double mover_speed_min = 2.0;
  double mover_speed_max = 15.0;
  std::vector<Vec2> mover_velocities;  // world frame, overrides the draw
  int clutter = 6;
  double clutter_doppler_max = 20.0;  // m/s
  double fov_half_angle = deg2rad(75.0);
  double range_min = 2.0;
  double range_max = 80.0;
};

struct NoiseModel {
  double sigma_azimuth = deg2rad(0.3);  // rad
  double sigma_doppler = 0.1;           // m/s
  /// Extra Doppler noise std per unit |acceleration| (s); stands in for the
  /// spectrum broadening seen under acceleration.
  double accel_doppler_coeff = 0.05;
};

struct RenderedFrame {
  RadarFrame frame;
  std::vector<DetectionLabel> labels;
};

inline RenderedFrame render_frame(const EgoState& ego, double accel, const MountPose& mount,
                                  const Population& pop, const NoiseModel& noise,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const Vec2 v_radar = radar_velocity(ego, mount);
  const double doppler_sigma =
      std::hypot(noise.sigma_doppler, noise.accel_doppler_coeff * std::abs(accel));

  RenderedFrame out;
  out.frame.t = ego.t;
  auto emit = [&](double az, double doppler, DetectionLabel label, bool perturb) {
    Detection d;
    const double az_noise = perturb ? noise.sigma_azimuth * gauss(rng) : 0.0;
    const double dop_noise = perturb ? doppler_sigma * gauss(rng) : 0.0;
    d.azimuth = Angle(az + az_noise);
    d.doppler = doppler + dop_noise;
    d.range = uniform(pop.range_min, pop.range_max);
    d.amplitude = uniform(0.0, 30.0);
    out.frame.detections.push_back(d);
    out.labels.push_back(label);
  };

  for (int i = 0; i < pop.statics; ++i) {
    const Angle az(uniform(-pop.fov_half_angle, pop.fov_half_angle));
    emit(az.rad(), predicted_doppler(v_radar, az), DetectionLabel::Static, true);
  }

  const int groups = std::max(1, pop.mover_groups);
  std::vector<Vec2> group_velocity_radar;
  for (int g = 0; g < groups; ++g) {
    Vec2 world;
    if (!pop.mover_velocities.empty()) {
      world = pop.mover_velocities[static_cast<std::size_t>(g) % pop.mover_velocities.size()];
    } else {
      const double speed = uniform(pop.mover_speed_min, pop.mover_speed_max);
      const double dir = uniform(-kPi, kPi);
      world = {speed * std::cos(dir), speed * std::sin(dir)};
    }
    group_velocity_radar.push_back(rotate(world, -(ego.heading.rad() + mount.theta.rad())));
  }
  for (int i = 0; i < pop.movers; ++i) {
    const Vec2 rel = v_radar - group_velocity_radar[static_cast<std::size_t>(i % groups)];
    const Angle az(uniform(-pop.fov_half_angle, pop.fov_half_angle));
    emit(az.rad(), predicted_doppler(rel, az), DetectionLabel::Mover, true);
  }

  for (int i = 0; i < pop.clutter; ++i) {
    const double az = uniform(-pop.fov_half_angle, pop.fov_half_angle);
    emit(az, uniform(-pop.clutter_doppler_max, pop.clutter_doppler_max), DetectionLabel::Clutter,
         false);
  }

  std::vector<std::size_t> order(out.labels.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  RenderedFrame shuffled;
  shuffled.frame.t = out.frame.t;
  for (std::size_t i : order) {
    shuffled.frame.detections.push_back(out.frame.detections[i]);
    shuffled.labels.push_back(out.labels[i]);
  }
  return shuffled;
}

struct ScenarioConfig {
  double duration = 25.0;   // s
  double frame_rate = 17.0; // Hz
  double imu_rate = 100.0;  // Hz
  MountPose mount{3.6, -0.6, Angle::from_degrees(25.0)};
  ImuModel imu_model{1.0, 0.01, 0.002};
  double stationary_duration = 2.0;
  std::vector<TrajectorySegment> segments = default_segments();
  int static_density = 42;
  int mover_count = 12;
  int mover_groups = 3;
  double mover_speed_min = 2.0;
  double mover_speed_max = 15.0;
  double clutter_ratio = 0.1;
  double clutter_doppler_max = 20.0;
  NoiseModel noise;
  double fov_half_angle = deg2rad(75.0);
  std::uint64_t seed = 42;

  /// A mixed-turn drive: accelerate, left turn, right turn, gentle left.
  static std::vector<TrajectorySegment> default_segments() {
    return {
        {3.0, 0.0, 10.0, 0.0, 0.0},  {4.0, 10.0, 10.0, 0.0, 0.3},
        {4.0, 10.0, 12.0, 0.3, 0.3}, {3.0, 12.0, 12.0, 0.3, -0.25},
        {4.0, 12.0, 8.0, -0.25, -0.25}, {3.0, 8.0, 8.0, -0.25, 0.15},
        {2.0, 8.0, 9.0, 0.15, 0.0},
    };
  }

  int clutter_count() const {
    if (clutter_ratio <= 0.0 || clutter_ratio >= 1.0) return 0;
    return static_cast<int>(
        std::lround(clutter_ratio / (1.0 - clutter_ratio) * (static_density + mover_count)));
  }

  Population population() const {
    Population p;
    p.statics = static_density;
    p.movers = mover_count;
    p.mover_groups = mover_groups;
    p.mover_speed_min = mover_speed_min;
    p.mover_speed_max = mover_speed_max;
    p.clutter = clutter_count();
    p.clutter_doppler_max = clutter_doppler_max;
    p.fov_half_angle = fov_half_angle;
    return p;
  }

  TrajectoryProfile profile() const { return {stationary_duration, segments}; }
};

/// Empty when the config is valid; otherwise one message per offending field.
inline std::vector<std::string> validate(const ScenarioConfig& c) {
  std::vector<std::string> errs;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) errs.push_back(msg);
  };
  check(c.duration > 0.0, "duration must be > 0");
  check(c.frame_rate > 0.0, "frame_rate must be > 0");
  check(c.imu_rate > 0.0, "imu_rate must be > 0");
  check(!(c.frame_rate > c.imu_rate), "frame_rate must not exceed imu_rate");
  check(c.imu_model.scale > 0.0, "imu_model.scale must be > 0");
  check(c.imu_model.noise_std >= 0.0, "imu_model.noise_std must be >= 0");
  check(c.stationary_duration >= 0.0, "stationary_duration must be >= 0");
  for (std::size_t i = 0; i < c.segments.size(); ++i) {
    check(c.segments[i].duration > 0.0, "segments[" + std::to_string(i) + "].duration must be > 0");
  }
  check(c.static_density >= 0, "static_density must be >= 0");
  check(c.mover_count >= 0, "mover_count must be >= 0");
  check(c.mover_groups >= 1, "mover_groups must be >= 1");
  check(c.mover_speed_min >= 0.0 && c.mover_speed_max >= c.mover_speed_min,
        "mover_speed_min/max must satisfy 0 <= min <= max");
  check(c.clutter_ratio >= 0.0 && c.clutter_ratio < 1.0, "clutter_ratio must lie in [0, 1)");
  check(c.clutter_doppler_max >= 0.0, "clutter_doppler_max must be >= 0");
  check(c.noise.sigma_azimuth >= 0.0, "noise.sigma_azimuth must be >= 0");
  check(c.noise.sigma_doppler >= 0.0, "noise.sigma_doppler must be >= 0");
  check(c.noise.accel_doppler_coeff >= 0.0, "noise.accel_doppler_coeff must be >= 0");
  check(c.fov_half_angle > 0.0 && c.fov_half_angle <= kPi, "fov_half_angle must lie in (0, pi]");
  return errs;
}

struct Scenario {
  ScenarioConfig config;
  std::vector<EgoState> ego;            // on the IMU grid
  std::vector<RadarFrame> frames;
  std::vector<std::size_t> frame_ego;   // index into `ego` per frame
  std::vector<std::vector<DetectionLabel>> labels;
  std::vector<ImuSample> imu;

  std::vector<TimeWindow> stationary_windows() const {
    if (config.stationary_duration <= 0.0) return {};
    return {{0.0, std::min(config.stationary_duration, config.duration)}};
  }
};

/// Renders a full scenario. Radar frames are scheduled at the nominal frame
/// rate and snapped to the IMU sample grid, so every frame has an IMU reading
/// taken at exactly its timestamp.
inline Scenario generate_scenario(const ScenarioConfig& cfg) {
  if (auto errs = validate(cfg); !errs.empty()) {
    std::string msg = "invalid scenario config:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw Error(ErrorKind::Validation, msg);
  }
  Scenario sc;
  sc.config = cfg;
  const double dt = 1.0 / cfg.imu_rate;
  const auto profile = cfg.profile();
  sc.ego = integrate_trajectory(profile, cfg.duration, dt);

  std::mt19937_64 imu_rng(frame_seed(cfg.seed, 0xA5A5A5A5ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  sc.imu.reserve(sc.ego.size());
  for (const auto& e : sc.ego) {
    const double nu = cfg.imu_model.noise_std > 0.0 ? cfg.imu_model.noise_std * gauss(imu_rng) : 0.0;
    sc.imu.push_back({e.t, apply_measurement_model(e.yaw_rate, cfg.imu_model, nu)});
  }

  const Population pop = cfg.population();
  std::size_t last_index = static_cast<std::size_t>(-1);
  for (std::size_t k = 0;; ++k) {
    const double nominal = static_cast<double>(k) / cfg.frame_rate;
    if (nominal > cfg.duration + 1e-12) break;
    const auto idx = static_cast<std::size_t>(std::llround(nominal * cfg.imu_rate));
    if (idx >= sc.ego.size()) break;
    if (idx == last_index) continue;
    last_index = idx;
    std::mt19937_64 rng(frame_seed(cfg.seed, k));
    const double accel = profile.at(sc.ego[idx].t).accel;
    auto rendered = render_frame(sc.ego[idx], accel, cfg.mount, pop, cfg.noise, rng);
    sc.frames.push_back(std::move(rendered.frame));
    sc.labels.push_back(std::move(rendered.labels));
    sc.frame_ego.push_back(idx);
  }
  return sc;
}

}  // namespace radcal
