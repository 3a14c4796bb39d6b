#pragma once

// Instantaneous radar ego-motion from a single scan's azimuth/Doppler pairs.
//
// Doppler sign convention: a static scatterer at azimuth a seen from a radar
// moving with velocity v reports d = -(v . u), u = (cos a, sin a). Under this
// convention the residual A*v - D with D = -d vanishes for static points.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "radcal/core.hpp"
#include "radcal/error.hpp"

namespace radcal {

struct Detection {
  Angle azimuth;
  double doppler = 0.0;    // m/s
  double range = 0.0;      // m, informational
  double amplitude = 0.0;  // informational
};

struct RadarFrame {
  double t = 0.0;
  std::vector<Detection> detections;

  std::size_t size() const { return detections.size(); }
};

/// Per-detection weights in [0, 1].
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::vector<double> w) : w_(std::move(w)) {
    for (std::size_t j = 0; j < w_.size(); ++j) {
      if (!(w_[j] >= 0.0 && w_[j] <= 1.0)) {
        throw Error(ErrorKind::Validation,
                    "weight " + std::to_string(j) + " outside [0, 1]: " + std::to_string(w_[j]));
      }
    }
  }

  static WeightVector ones(std::size_t n) { return WeightVector(std::vector<double>(n, 1.0)); }
  static WeightVector zeros(std::size_t n) { return WeightVector(std::vector<double>(n, 0.0)); }

  std::size_t size() const { return w_.size(); }
  bool empty() const { return w_.empty(); }
  double operator[](std::size_t j) const { return w_[j]; }
  std::span<const double> values() const { return w_; }

  bool operator==(const WeightVector&) const = default;

 private:
  std::vector<double> w_;
};

/// 2x2 motion covariance, or the "diag(inf, inf)" sentinel of a sparse frame.
class MotionCovariance {
 public:
  static MotionCovariance infinite() { return MotionCovariance(); }
  static MotionCovariance finite(const Eigen::Matrix2d& m) { return MotionCovariance(m); }

  bool is_infinite() const { return infinite_; }
  const Eigen::Matrix2d& matrix() const { return m_; }

  /// Var_xx + Var_yy; +inf for the sentinel.
  double trace() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : m_.trace();
  }

 private:
  MotionCovariance() = default;
  explicit MotionCovariance(const Eigen::Matrix2d& m) : infinite_(false), m_(m) {}

  bool infinite_ = true;
  Eigen::Matrix2d m_ = Eigen::Matrix2d::Zero();
};

struct MotionEstimate {
  double t = 0.0;
  Vec2 v;
  Angle beta;
  WeightVector weights;
  int inlier_count = 0;
  MotionCovariance covariance = MotionCovariance::infinite();
  bool sparse = true;
};

struct RansacConfig {
  double doppler_threshold = 0.2;  // m/s
  int iterations = 100;
  int min_inliers = 5;
  std::uint64_t seed = 0;
};

struct MotionConfig {
  double inlier_threshold = 0.5;        // IT
  double inlier_ratio_threshold = 0.3;  // IRT
};

inline double predicted_doppler(const Vec2& v, Angle azimuth) {
  return -(v.x * std::cos(azimuth.rad()) + v.y * std::sin(azimuth.rad()));
}

namespace detail {

struct NormalEquations {
  Eigen::Matrix2d lhs = Eigen::Matrix2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  int positive = 0;
};

inline NormalEquations accumulate(const RadarFrame& frame, std::span<const double> w) {
  NormalEquations ne;
  for (std::size_t j = 0; j < frame.size(); ++j) {
    if (w[j] <= 0.0) continue;
    const Detection& d = frame.detections[j];
    const Eigen::Vector2d a(std::cos(d.azimuth.rad()), std::sin(d.azimuth.rad()));
    ne.lhs += w[j] * a * a.transpose();
    ne.rhs += w[j] * a * (-d.doppler);
    ++ne.positive;
  }
  return ne;
}

inline bool is_singular(const Eigen::Matrix2d& m) {
  const double tr = m.trace();
  return !(tr > 0.0) || m.determinant() <= 1e-12 * tr * tr;
}

/// splitmix64 finalizer; used to derive independent per-frame seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

inline std::uint64_t frame_seed(std::uint64_t base, std::uint64_t frame_index) {
  return detail::mix64(base ^ detail::mix64(frame_index));
}

/// Weighted least-squares fit of the radar velocity to a frame's Doppler
/// profile: argmin_v sum_j w_j (cos a_j v_x + sin a_j v_y + d_j)^2.
inline Vec2 solve_wlsq_motion(const RadarFrame& frame, const WeightVector& weights) {
  if (weights.size() != frame.size()) {
    throw Error(ErrorKind::Alignment, "solve_wlsq_motion: weight count does not match detections");
  }
  const auto ne = detail::accumulate(frame, weights.values());
  if (ne.positive < 2) {
    throw Error(ErrorKind::InsufficientData, "solve_wlsq_motion: fewer than 2 weighted detections");
  }
  if (detail::is_singular(ne.lhs)) {
    throw Error(ErrorKind::SingularGeometry, "solve_wlsq_motion: azimuths do not span the plane");
  }
  const Eigen::Vector2d v = ne.lhs.ldlt().solve(ne.rhs);
  return {v.x(), v.y()};
}

/// L = number of weights at or above the inlier threshold.
inline int count_inliers(const WeightVector& weights, double inlier_threshold) {
  if (!(inlier_threshold > 0.0 && inlier_threshold <= 1.0)) {
    throw Error(ErrorKind::Domain, "count_inliers: threshold must lie in (0, 1]");
  }
  return static_cast<int>(std::count_if(weights.values().begin(), weights.values().end(),
                                        [&](double w) { return w >= inlier_threshold; }));
}

inline std::vector<bool> inlier_mask(const WeightVector& weights, double inlier_threshold) {
  std::vector<bool> mask(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) mask[j] = weights[j] >= inlier_threshold;
  return mask;
}

/// Design rows (cos a, sin a) of the masked detections.
inline std::vector<Vec2> design_rows(const RadarFrame& frame, const std::vector<bool>& mask) {
  std::vector<Vec2> rows;
  for (std::size_t j = 0; j < frame.size(); ++j) {
    if (!mask[j]) continue;
    const double a = frame.detections[j].azimuth.rad();
    rows.push_back({std::cos(a), std::sin(a)});
  }
  return rows;
}

/// eps = A*v - D over the masked detections, D_l = -d_l.
inline std::vector<double> residuals(const RadarFrame& frame, const Vec2& v,
                                     const std::vector<bool>& mask) {
  if (mask.size() != frame.size()) {
    throw Error(ErrorKind::Alignment, "residuals: mask size does not match detections");
  }
  std::vector<double> eps;
  for (std::size_t j = 0; j < frame.size(); ++j) {
    if (!mask[j]) continue;
    const Detection& d = frame.detections[j];
    eps.push_back(std::cos(d.azimuth.rad()) * v.x + std::sin(d.azimuth.rad()) * v.y + d.doppler);
  }
  if (eps.empty()) {
    throw Error(ErrorKind::InsufficientData, "residuals: inlier mask is empty");
  }
  return eps;
}

/// Motion covariance (eps'eps / (L-2)) (A'A)^-1, or the infinite sentinel when
/// the inlier ratio L/J is below IRT. L <= 2 also yields the sentinel since the
/// residual variance has no degrees of freedom left.
inline MotionCovariance motion_covariance(std::span<const double> eps, std::span<const Vec2> rows,
                                          int inliers, int detections,
                                          double inlier_ratio_threshold) {
  if (detections <= 0) return MotionCovariance::infinite();
  const double ratio = static_cast<double>(inliers) / static_cast<double>(detections);
  if (ratio < inlier_ratio_threshold || inliers <= 2) return MotionCovariance::infinite();
  if (eps.size() != rows.size()) {
    throw Error(ErrorKind::Alignment, "motion_covariance: residual and design row counts differ");
  }
  Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
  for (const Vec2& a : rows) {
    const Eigen::Vector2d r(a.x, a.y);
    ata += r * r.transpose();
  }
  if (detail::is_singular(ata)) {
    throw Error(ErrorKind::SingularGeometry, "motion_covariance: A'A is singular");
  }
  double sse = 0.0;
  for (double e : eps) sse += e * e;
  Eigen::Matrix2d cov = (sse / static_cast<double>(inliers - 2)) * ata.inverse();
  cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
  return MotionCovariance::finite(cov);
}

/// Binary inlier weights from a seeded 2-point RANSAC over the Doppler profile.
///
/// The best hypothesis (most points with |residual| <= threshold, earliest
/// wins ties) is refit on its consensus set and the set re-selected until it
/// stops changing, so every returned inlier satisfies the threshold against
/// the least-squares fit of the returned set. When the frame has few enough
/// pairs, all of them are tried in index order instead of sampling.
inline WeightVector ransac_weights(const RadarFrame& frame, const RansacConfig& cfg) {
  const std::size_t n = frame.size();
  if (n < 2) {
    throw Error(ErrorKind::InsufficientData, "ransac_weights: need at least 2 detections");
  }
  std::vector<double> cs(n), sn(n), rhs(n);
  for (std::size_t j = 0; j < n; ++j) {
    cs[j] = std::cos(frame.detections[j].azimuth.rad());
    sn[j] = std::sin(frame.detections[j].azimuth.rad());
    rhs[j] = -frame.detections[j].doppler;
  }
  auto consensus = [&](double vx, double vy, std::vector<double>* out) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool in = std::abs(cs[j] * vx + sn[j] * vy - rhs[j]) <= cfg.doppler_threshold;
      count += in;
      if (out) (*out)[j] = in ? 1.0 : 0.0;
    }
    return count;
  };

  std::size_t best_count = 0;
  double best_vx = 0.0, best_vy = 0.0;
  auto try_pair = [&](std::size_t i, std::size_t k) {
    const double det = cs[i] * sn[k] - sn[i] * cs[k];
    if (std::abs(det) < 1e-9) return;
    const double vx = (rhs[i] * sn[k] - sn[i] * rhs[k]) / det;
    const double vy = (cs[i] * rhs[k] - rhs[i] * cs[k]) / det;
    const std::size_t c = consensus(vx, vy, nullptr);
    if (c > best_count) {
      best_count = c;
      best_vx = vx;
      best_vy = vy;
    }
  };

  const std::size_t pairs = n * (n - 1) / 2;
  const std::size_t iterations = static_cast<std::size_t>(std::max(cfg.iterations, 0));
  if (pairs <= iterations) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i + 1; k < n; ++k) try_pair(i, k);
  } else {
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t it = 0; it < iterations; ++it) {
      const std::size_t i = rng() % n;
      std::size_t k = rng() % (n - 1);
      if (k >= i) ++k;
      try_pair(i, k);
    }
  }

  const std::size_t required =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.min_inliers, 2)), n);
  if (best_count < required) return WeightVector::zeros(n);

  std::vector<double> w(n, 0.0);
  consensus(best_vx, best_vy, &w);
  for (int round = 0; round < 10; ++round) {
    Vec2 fit;
    try {
      fit = solve_wlsq_motion(frame, WeightVector(w));
    } catch (const Error&) {
      break;
    }
    std::vector<double> next(n, 0.0);
    const std::size_t c = consensus(fit.x, fit.y, &next);
    if (next == w) break;
    if (c < required) break;
    w = std::move(next);
  }
  return WeightVector(std::move(w));
}

/// Speed/yaw-rate gate: frames below 1 m/s or above 140 deg/s are rejected.
struct GateConfig {
  double min_speed = 1.0;                 // m/s
  double max_yaw_rate = deg2rad(140.0);  // rad/s
};

inline bool gate_frame(double speed, double yaw_rate, const GateConfig& cfg = {}) {
  return speed >= cfg.min_speed && std::abs(yaw_rate) <= cfg.max_yaw_rate;
}

/// Full single-frame chain: weights -> wLSQ velocity -> inlier count ->
/// inlier residuals -> covariance / sparse decision.
inline MotionEstimate estimate_motion(const RadarFrame& frame, WeightVector weights,
                                      const MotionConfig& cfg) {
  MotionEstimate est;
  est.t = frame.t;
  const int detections = static_cast<int>(frame.size());
  est.inlier_count = count_inliers(weights, cfg.inlier_threshold);
  try {
    est.v = solve_wlsq_motion(frame, weights);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InsufficientData && e.kind() != ErrorKind::SingularGeometry) throw;
    est.weights = std::move(weights);
    return est;
  }
  if (est.v.norm() > 0.0) est.beta = motion_direction(est.v);
  if (est.inlier_count >= 1) {
    const auto mask = inlier_mask(weights, cfg.inlier_threshold);
    const auto eps = residuals(frame, est.v, mask);
    const auto rows = design_rows(frame, mask);
    try {
      est.covariance = motion_covariance(eps, rows, est.inlier_count, detections,
                                         cfg.inlier_ratio_threshold);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SingularGeometry) throw;
      est.covariance = MotionCovariance::infinite();
    }
  }
  est.sparse = est.covariance.is_infinite();
  est.weights = std::move(weights);
  return est;
}

inline MotionEstimate estimate_motion_ransac(const RadarFrame& frame, const RansacConfig& ransac,
                                             const MotionConfig& cfg) {
  if (frame.size() < 2) {
    MotionEstimate est;
    est.t = frame.t;
    est.weights = WeightVector::zeros(frame.size());
    return est;
  }
  return estimate_motion(frame, ransac_weights(frame, ransac), cfg);
}

}  // namespace radcal
