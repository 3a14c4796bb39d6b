#pragma once

// Yaw-rate measurement model: omega = s * omega_true + b + nu.

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "radcal/error.hpp"

namespace radcal {

struct ImuSample {
  double t = 0.0;         // s
  double yaw_rate = 0.0;  // rad/s, measured
};

struct ImuModel {
  double scale = 1.0;      // s
  double bias = 0.0;       // b, rad/s
  double noise_std = 0.0;  // sigma_omega, rad/s
};

inline double apply_measurement_model(double true_rate, const ImuModel& model, double noise_draw) {
  return model.scale * true_rate + model.bias + noise_draw;
}

/// Constant bias as the sample mean of readings taken while stationary.
inline double estimate_bias(std::span<const ImuSample> stationary) {
  if (stationary.empty()) {
    throw Error(ErrorKind::InsufficientData, "estimate_bias: no stationary samples");
  }
  double sum = 0.0;
  for (const ImuSample& s : stationary) sum += s.yaw_rate;
  return sum / static_cast<double>(stationary.size());
}

inline double debias(double omega, double bias_estimate) { return omega - bias_estimate; }

/// Sample standard deviation of stationary readings; an estimate of sigma_omega.
inline double estimate_noise_std(std::span<const ImuSample> stationary) {
  if (stationary.size() < 2) return 0.0;
  const double mean = estimate_bias(stationary);
  double ss = 0.0;
  for (const ImuSample& s : stationary) ss += (s.yaw_rate - mean) * (s.yaw_rate - mean);
  return std::sqrt(ss / static_cast<double>(stationary.size() - 1));
}

struct TimeWindow {
  double begin = 0.0;
  double end = 0.0;
};

struct StationaryConfig {
  double speed_threshold = 0.05;  // m/s
  double min_duration = 1.0;      // s
};

/// Windows of at least cfg.min_duration in which every speed sample lies below
/// cfg.speed_threshold. `times` and `speeds` are parallel, time-ordered.
inline std::vector<TimeWindow> stationary_windows(std::span<const double> times,
                                                  std::span<const double> speeds,
                                                  const StationaryConfig& cfg = {}) {
  std::vector<TimeWindow> out;
  std::size_t i = 0;
  while (i < times.size()) {
    if (!(std::abs(speeds[i]) < cfg.speed_threshold)) {
      ++i;
      continue;
    }
    std::size_t k = i;
    while (k + 1 < times.size() && std::abs(speeds[k + 1]) < cfg.speed_threshold) ++k;
    if (times[k] - times[i] >= cfg.min_duration) out.push_back({times[i], times[k]});
    i = k + 1;
  }
  return out;
}

/// IMU samples whose timestamps fall inside any of the windows.
inline std::vector<ImuSample> samples_in(std::span<const ImuSample> imu,
                                         std::span<const TimeWindow> windows) {
  std::vector<ImuSample> out;
  for (const ImuSample& s : imu) {
    for (const TimeWindow& w : windows) {
      if (s.t >= w.begin && s.t <= w.end) {
        out.push_back(s);
        break;
      }
    }
  }
  return out;
}

/// Linear interpolation of the yaw-rate series at time t (clamped at the ends).
inline double interpolate_yaw_rate(std::span<const ImuSample> imu, double t) {
  if (imu.empty()) throw Error(ErrorKind::InsufficientData, "interpolate_yaw_rate: empty series");
  if (t <= imu.front().t) return imu.front().yaw_rate;
  if (t >= imu.back().t) return imu.back().yaw_rate;
  std::size_t lo = 0, hi = imu.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (imu[mid].t <= t) lo = mid; else hi = mid;
  }
  if (imu[lo].t == t) return imu[lo].yaw_rate;
  const double a = (t - imu[lo].t) / (imu[hi].t - imu[lo].t);
  return imu[lo].yaw_rate + a * (imu[hi].yaw_rate - imu[lo].yaw_rate);
}

}  // namespace radcal
