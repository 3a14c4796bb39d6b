#pragma once

// End-to-end calibration run: per-frame motion estimation, stationary-window
// bias estimation, gating, lateral observations and the selected estimators.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radcal/core.hpp"
#include "radcal/error.hpp"
#include "radcal/imu.hpp"
#include "radcal/motion.hpp"
#include "radcal/mount.hpp"

namespace radcal {

enum class WeightSource { Ransac, External, Unit };

inline const char* to_string(WeightSource w) {
  switch (w) {
    case WeightSource::Ransac: return "ransac";
    case WeightSource::External: return "external";
    case WeightSource::Unit: return "unit";
  }
  return "?";
}

inline WeightSource parse_weight_source(const std::string& s) {
  if (s == "ransac") return WeightSource::Ransac;
  if (s == "external") return WeightSource::External;
  if (s == "unit") return WeightSource::Unit;
  throw Error(ErrorKind::Validation, "unknown weight source '" + s + "'");
}

inline const std::vector<std::string>& all_estimators() {
  static const std::vector<std::string> names{"wlsq", "mean", "kabsch", "odr"};
  return names;
}

/// "all" or a single estimator name.
inline std::vector<std::string> parse_estimators(const std::string& s) {
  if (s == "all") return all_estimators();
  for (const auto& n : all_estimators())
    if (n == s) return {s};
  throw Error(ErrorKind::Validation, "unknown estimator '" + s + "' (wlsq | mean | kabsch | odr | all)");
}

struct EstimateConfig {
  double mount_x_s = 3.6;
  double mount_y_s = -0.6;
  RansacConfig ransac;
  MotionConfig motion;
  GateConfig gate;
  // Radar speed is noisier than odometry, hence the looser threshold.
  StationaryConfig stationary{0.2, 1.0};
  int stationary_median_window = 5;  // frames, odd
  WeightSource weight_source = WeightSource::Ransac;
  std::vector<std::string> estimators{"wlsq"};
  bool kabsch_two_pass = false;
  std::optional<double> odr_sigma_beta;
  std::optional<double> odr_sigma_chi;
};

struct FrameRecord {
  double t = 0.0;
  int detections = 0;
  int inliers = 0;
  bool gated_in = false;
  bool sparse = true;
  Vec2 v;
  double yaw_rate = 0.0;  // debiased
  double eta = 0.0;
  double chi = 0.0;
  bool clamped = false;
};

struct FrameProducts {
  double bias = 0.0;
  bool bias_estimated = false;
  double imu_noise_std = 0.0;
  std::vector<TimeWindow> stationary;
  std::vector<MotionEstimate> motions;  // one per input frame
  std::vector<double> yaw_rates;        // debiased, one per input frame
  std::vector<FrameRecord> records;
  // Gated-in frames only, parallel vectors.
  std::vector<LateralObservation> observations;
  std::vector<Vec2> obs_velocity;
  std::vector<double> obs_yaw_rate;

  int frames_gated_in() const { return static_cast<int>(observations.size()); }
  int frames_weighted() const {
    return static_cast<int>(std::count_if(observations.begin(), observations.end(),
                                          [](const auto& o) { return o.eta > 0.0; }));
  }
  int clamp_events() const {
    return static_cast<int>(std::count_if(observations.begin(), observations.end(),
                                          [](const auto& o) { return o.clamped; }));
  }
};

namespace detail {

inline std::vector<double> median_filter(std::span<const double> x, int window) {
  const int half = std::max(0, window / 2);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= static_cast<std::size_t>(half) ? i - half : 0;
    const std::size_t hi = std::min(x.size() - 1, i + static_cast<std::size_t>(half));
    std::vector<double> w(x.begin() + static_cast<long>(lo), x.begin() + static_cast<long>(hi) + 1);
    std::nth_element(w.begin(), w.begin() + static_cast<long>(w.size() / 2), w.end());
    out[i] = w[w.size() / 2];
  }
  return out;
}

}  // namespace detail

/// Everything up to the lateral observations. `external` must hold one weight
/// vector per frame when cfg.weight_source is External.
inline FrameProducts process_frames(std::span<const RadarFrame> frames, std::span<const ImuSample> imu,
                                    const EstimateConfig& cfg,
                                    const std::vector<WeightVector>* external = nullptr) {
  if (imu.empty()) throw Error(ErrorKind::InsufficientData, "no IMU samples");
  if (cfg.weight_source == WeightSource::External) {
    if (!external || external->size() != frames.size()) {
      throw Error(ErrorKind::Alignment, "external weights must provide one vector per frame");
    }
  }
  FrameProducts out;
  out.motions.reserve(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const RadarFrame& f = frames[k];
    switch (cfg.weight_source) {
      case WeightSource::Ransac: {
        RansacConfig rc = cfg.ransac;
        rc.seed = frame_seed(cfg.ransac.seed, k);
        out.motions.push_back(estimate_motion_ransac(f, rc, cfg.motion));
        break;
      }
      case WeightSource::External:
        if ((*external)[k].size() != f.size()) {
          throw Error(ErrorKind::Alignment, "external weights do not match frame " + std::to_string(k));
        }
        out.motions.push_back(estimate_motion(f, (*external)[k], cfg.motion));
        break;
      case WeightSource::Unit:
        out.motions.push_back(estimate_motion(f, WeightVector::ones(f.size()), cfg.motion));
        break;
    }
  }

  // Stationary windows from the radar's own speed, median-filtered so single
  // noisy frames do not split a window.
  std::vector<double> times, speeds;
  for (const auto& m : out.motions) {
    times.push_back(m.t);
    const bool solved = m.inlier_count >= 2 && !m.weights.empty();
    speeds.push_back(solved ? m.v.norm() : std::numeric_limits<double>::infinity());
  }
  const auto smoothed = detail::median_filter(speeds, cfg.stationary_median_window);
  out.stationary = stationary_windows(times, smoothed, cfg.stationary);
  const auto still = samples_in(imu, out.stationary);
  if (!still.empty()) {
    out.bias = estimate_bias(still);
    out.bias_estimated = true;
    out.imu_noise_std = estimate_noise_std(still);
  }

  out.yaw_rates.reserve(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const MotionEstimate& m = out.motions[k];
    const double omega = debias(interpolate_yaw_rate(imu, m.t), out.bias);
    out.yaw_rates.push_back(omega);

    FrameRecord rec;
    rec.t = m.t;
    rec.detections = static_cast<int>(frames[k].size());
    rec.inliers = m.inlier_count;
    rec.sparse = m.sparse;
    rec.v = m.v;
    rec.yaw_rate = omega;
    const double speed = m.v.norm();
    const double vehicle_speed = rear_axle_speed(speed, omega, cfg.mount_x_s, cfg.mount_y_s);
    rec.gated_in = speed > 0.0 && gate_frame(vehicle_speed, omega, cfg.gate);
    if (rec.gated_in) {
      const auto obs = lateral_observation(m, omega, cfg.mount_x_s);
      rec.eta = obs.eta;
      rec.chi = obs.chi;
      rec.clamped = obs.clamped;
      out.observations.push_back(obs);
      out.obs_velocity.push_back(m.v);
      out.obs_yaw_rate.push_back(omega);
    }
    out.records.push_back(rec);
  }
  return out;
}

struct EstimatorSolution {
  CalibrationSolution solution;
  bool ok = true;
  bool fallback = false;  // scale unobservable, weighted mean with s' = 1 used
  std::string note;
};

using SolutionSet = std::map<std::string, EstimatorSolution>;

namespace detail {

inline EstimatorSolution mean_solution(std::span<const LateralObservation> obs) {
  EstimatorSolution s;
  s.solution.theta = solve_weighted_mean_angle(obs);
  s.solution.s_prime = 1.0;
  s.solution.frames_used = count_weighted(obs);
  detail::BetaUnwrapper unwrap;
  double num = 0.0, den = 0.0;
  for (const auto& o : obs) {
    if (o.eta <= 0.0) continue;
    const double r = wrap_pi(std::asin(o.chi) - unwrap(o) - s.solution.theta.rad());
    num += o.eta * r * r;
    den += o.eta;
  }
  s.solution.residual_norm = std::sqrt(num / den);
  return s;
}

}  // namespace detail

/// Runs the configured estimators over the gated observations whose time lies
/// in [t_begin, t_end]. Throws InsufficientData when no frame carries weight.
inline SolutionSet solve_estimators(const FrameProducts& p, const EstimateConfig& cfg,
                                    double t_begin = -std::numeric_limits<double>::infinity(),
                                    double t_end = std::numeric_limits<double>::infinity()) {
  std::vector<LateralObservation> obs;
  std::vector<Vec2> vel;
  std::vector<double> yaw;
  for (std::size_t i = 0; i < p.observations.size(); ++i) {
    const double t = p.observations[i].t;
    if (t < t_begin || t > t_end) continue;
    obs.push_back(p.observations[i]);
    vel.push_back(p.obs_velocity[i]);
    yaw.push_back(p.obs_yaw_rate[i]);
  }
  if (detail::count_weighted(obs) == 0) {
    throw Error(ErrorKind::InsufficientData, "every frame was rejected (gated out or sparse)");
  }

  SolutionSet out;
  std::optional<EstimatorSolution> wlsq;
  auto run_wlsq = [&]() -> EstimatorSolution {
    if (wlsq) return *wlsq;
    EstimatorSolution s;
    try {
      s.solution = solve_wlsq_angle(obs);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::UnobservableScale) {
        s = detail::mean_solution(obs);
        s.fallback = true;
        s.note = e.what();
      } else if (e.kind() == ErrorKind::InsufficientData) {
        s.ok = false;
        s.note = e.what();
      } else {
        throw;
      }
    }
    wlsq = s;
    return s;
  };

  for (const auto& name : cfg.estimators) {
    if (name == "wlsq") {
      out[name] = run_wlsq();
    } else if (name == "mean") {
      out[name] = detail::mean_solution(obs);
    } else if (name == "kabsch") {
      double s_prime = 1.0;
      if (cfg.kabsch_two_pass) {
        const auto w = run_wlsq();
        if (w.ok && !w.fallback) s_prime = w.solution.s_prime;
      }
      std::vector<Vec2> pred(obs.size());
      std::vector<double> etas(obs.size());
      for (std::size_t i = 0; i < obs.size(); ++i) {
        const double omega = yaw[i] * s_prime;
        const double speed = rear_axle_speed(vel[i].norm(), omega, cfg.mount_x_s, cfg.mount_y_s);
        pred[i] = sensor_velocity(speed, omega, MountPose{cfg.mount_x_s, cfg.mount_y_s, Angle()});
        etas[i] = obs[i].eta;
      }
      EstimatorSolution s;
      s.solution.theta = solve_kabsch_angle(vel, pred, etas);
      s.solution.s_prime = s_prime;
      s.solution.frames_used = detail::count_weighted(obs);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < obs.size(); ++i) {
        if (etas[i] <= 0.0) continue;
        const double r = (rotate(vel[i], s.solution.theta.rad()) - pred[i]).norm();
        num += etas[i] * r * r;
        den += etas[i];
      }
      s.solution.residual_norm = std::sqrt(num / den);
      s.note = "residual_norm in m/s";
      out[name] = s;
    } else if (name == "odr") {
      const auto w = run_wlsq();
      if (!w.ok || w.fallback) {
        out[name] = w;
        continue;
      }
      OdrScales sc = odr_scales_from_covariance(obs, cfg.mount_x_s, p.imu_noise_std);
      if (cfg.odr_sigma_beta) sc.sigma_beta = *cfg.odr_sigma_beta;
      if (cfg.odr_sigma_chi) sc.sigma_chi = *cfg.odr_sigma_chi;
      EstimatorSolution s;
      s.solution = solve_odr_angle(obs, sc.sigma_beta, sc.sigma_chi);
      if (!s.solution.converged) s.note = "gauss-newton did not converge; best iterate returned";
      out[name] = s;
    } else {
      throw Error(ErrorKind::Validation, "unknown estimator '" + name + "'");
    }
  }
  const bool any_ok = std::any_of(out.begin(), out.end(), [](const auto& kv) { return kv.second.ok; });
  if (!any_ok) throw Error(ErrorKind::InsufficientData, "no estimator had enough weighted frames");
  return out;
}

}  // namespace radcal
