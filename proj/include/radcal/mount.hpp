#pragma once

// Mounting-angle estimators built on the lateral-velocity identity
//
//   |V| sin(beta + theta) = (omega_debiased / s) x_s
//
// i.e. beta = asin(s' chi) - theta with s' = 1/s and chi = omega x_s / |V|.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "radcal/core.hpp"
#include "radcal/error.hpp"
#include "radcal/motion.hpp"

namespace radcal {

/// chi is kept strictly inside (-1, 1) by this margin before any asin.
inline constexpr double kChiClampMargin = 1e-9;
/// Lower bound on Var_xx + Var_yy so that exact (noise-free) fits give a
/// finite, equal frame weight instead of 1/0.
inline constexpr double kMotionVarianceFloor = 1e-12;

struct LateralObservation {
  double t = 0.0;
  Angle beta;
  double chi = 0.0;
  double eta = 0.0;         // frame weight, 1 / (Var_xx + Var_yy); 0 for sparse frames
  double speed_norm = 0.0;  // |V_radar|
  bool clamped = false;     // chi was pulled back inside (-1, 1)
};

struct CalibrationSolution {
  Angle theta;
  double s_prime = 1.0;
  int frames_used = 0;
  double residual_norm = 0.0;  // rad, eta-weighted RMS of the fitted residuals
  bool converged = true;
  int iterations = 0;
};

inline LateralObservation lateral_observation(const MotionEstimate& est, double omega_debiased,
                                              double x_s) {
  const double speed = est.v.norm();
  if (!(speed > 0.0)) {
    throw Error(ErrorKind::InsufficientData, "lateral_observation: zero radar velocity");
  }
  LateralObservation obs;
  obs.t = est.t;
  obs.beta = motion_direction(est.v);
  obs.speed_norm = speed;
  double chi = omega_debiased * x_s / speed;
  const double limit = 1.0 - kChiClampMargin;
  if (std::abs(chi) > limit) {
    chi = std::copysign(limit, chi);
    obs.clamped = true;
  }
  obs.chi = chi;
  obs.eta = est.covariance.is_infinite()
                ? 0.0
                : 1.0 / std::max(est.covariance.trace(), kMotionVarianceFloor);
  return obs;
}

/// One stacked row of the linearized system Y = U X, X = (theta, s'),
/// linearized at s'_0 = 1.
struct TaylorRow {
  double y = 0.0;
  double u_theta = -1.0;
  double u_scale = 0.0;
};

inline TaylorRow taylor_row(double chi, double beta) {
  if (!(std::abs(chi) < 1.0)) {
    throw Error(ErrorKind::Domain, "taylor_row: |chi| must be < 1");
  }
  const double slope = chi / std::sqrt(1.0 - chi * chi);
  return {beta - std::asin(chi) + slope, -1.0, slope};
}

inline TaylorRow taylor_row(double chi, Angle beta) { return taylor_row(chi, beta.rad()); }

namespace detail {

/// Per-frame angle terms asin(chi) - beta are unwrapped against the first
/// weighted frame so estimators near +-180 deg do not average across the cut.
/// Returns beta shifted by a multiple of 2 pi (bit-identical when no shift).
class BetaUnwrapper {
 public:
  double operator()(const LateralObservation& o) {
    const double term = std::asin(o.chi) - o.beta.rad();
    if (!has_ref_) {
      ref_ = term;
      has_ref_ = true;
      return o.beta.rad();
    }
    double beta = o.beta.rad();
    const double d = term - ref_;
    if (d > kPi) beta += kTwoPi;
    else if (d < -kPi) beta -= kTwoPi;
    return beta;
  }

 private:
  bool has_ref_ = false;
  double ref_ = 0.0;
};

inline int count_weighted(std::span<const LateralObservation> obs) {
  return static_cast<int>(std::count_if(obs.begin(), obs.end(), [](const auto& o) { return o.eta > 0.0; }));
}

}  // namespace detail

/// Joint (theta, s') weighted least squares, single Taylor step at s'_0 = 1:
/// X = (U'QU)^-1 U'QY, Q = diag(eta).
inline CalibrationSolution solve_wlsq_angle(std::span<const LateralObservation> obs) {
  const int used = detail::count_weighted(obs);
  if (used < 3) {
    throw Error(ErrorKind::InsufficientData, "solve_wlsq_angle: fewer than 3 weighted frames");
  }
  Eigen::Matrix2d utqu = Eigen::Matrix2d::Zero();
  Eigen::Vector2d utqy = Eigen::Vector2d::Zero();
  detail::BetaUnwrapper unwrap;
  std::vector<TaylorRow> rows;
  std::vector<double> etas;
  for (const auto& o : obs) {
    if (o.eta <= 0.0) continue;
    const TaylorRow r = taylor_row(o.chi, unwrap(o));
    const Eigen::Vector2d u(r.u_theta, r.u_scale);
    utqu += o.eta * u * u.transpose();
    utqy += o.eta * u * r.y;
    rows.push_back(r);
    etas.push_back(o.eta);
  }
  const double det = utqu.determinant();
  if (!(det > 1e-10 * utqu(0, 0) * utqu(1, 1))) {
    throw Error(ErrorKind::UnobservableScale,
                "solve_wlsq_angle: yaw-rate excitation too low to separate scale from angle; "
                "fall back to the weighted mean with s' = 1");
  }
  const Eigen::Vector2d x = utqu.inverse() * utqy;

  CalibrationSolution sol;
  sol.theta = Angle(x(0));
  sol.s_prime = x(1);
  sol.frames_used = used;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double r = rows[i].y - (rows[i].u_theta * x(0) + rows[i].u_scale * x(1));
    num += etas[i] * r * r;
    den += etas[i];
  }
  sol.residual_norm = std::sqrt(num / den);
  return sol;
}

/// eta-weighted mean of the per-frame angles asin(chi) - beta (s = 1).
inline Angle solve_weighted_mean_angle(std::span<const LateralObservation> obs) {
  double num = 0.0, den = 0.0;
  detail::BetaUnwrapper unwrap;
  for (const auto& o : obs) {
    if (o.eta <= 0.0) continue;
    const double beta = unwrap(o);
    num += o.eta * (std::asin(o.chi) - beta);
    den += o.eta;
  }
  if (!(den > 0.0)) {
    throw Error(ErrorKind::InsufficientData, "solve_weighted_mean_angle: all frame weights are zero");
  }
  return Angle(num / den);
}

/// Closed-form weighted 2D Procrustes rotation: argmin_theta
/// sum eta |R(theta) v_radar - v_pred|^2.
inline Angle solve_kabsch_angle(std::span<const Vec2> radar_vs, std::span<const Vec2> predicted_vs,
                                std::span<const double> etas) {
  if (radar_vs.size() != predicted_vs.size() || radar_vs.size() != etas.size()) {
    throw Error(ErrorKind::Alignment, "solve_kabsch_angle: input lengths differ");
  }
  double sin_sum = 0.0, cos_sum = 0.0;
  int usable = 0;
  for (std::size_t i = 0; i < radar_vs.size(); ++i) {
    if (etas[i] <= 0.0) continue;
    if (radar_vs[i].norm() == 0.0 || predicted_vs[i].norm() == 0.0) continue;
    sin_sum += etas[i] * radar_vs[i].cross(predicted_vs[i]);
    cos_sum += etas[i] * radar_vs[i].dot(predicted_vs[i]);
    ++usable;
  }
  if (usable == 0 || (sin_sum == 0.0 && cos_sum == 0.0)) {
    throw Error(ErrorKind::InsufficientData, "solve_kabsch_angle: no usable velocity pairs");
  }
  return Angle(std::atan2(sin_sum, cos_sum));
}

/// Rear-axle forward speed implied by a radar speed |V| and yaw rate, without
/// knowing the mounting angle: |V|^2 = (v - omega y_s)^2 + (omega x_s)^2.
inline double rear_axle_speed(double radar_speed, double yaw_rate, double x_s, double y_s) {
  const double lateral = yaw_rate * x_s;
  const double along = std::sqrt(std::max(0.0, radar_speed * radar_speed - lateral * lateral));
  return along + yaw_rate * y_s;
}

struct OdrConfig {
  int max_iterations = 50;
  double step_tolerance = 1e-10;
};

/// Weighted orthogonal distance regression over (beta, chi): minimizes
/// sum eta [(d_beta / sigma_beta)^2 + (d_chi / sigma_chi)^2] subject to
/// beta + d_beta = asin(s' (chi + d_chi)) - theta, by Gauss-Newton started
/// from the wLSQ solution. The per-frame chi corrections are eliminated in
/// closed form each step, leaving a 2x2 system in (theta, s').
inline CalibrationSolution solve_odr_angle(std::span<const LateralObservation> obs, double sigma_beta,
                                           double sigma_chi, const OdrConfig& cfg = {}) {
  if (!(sigma_beta >= 0.0) || !(sigma_chi >= 0.0) || (sigma_beta == 0.0 && sigma_chi == 0.0)) {
    throw Error(ErrorKind::Domain, "solve_odr_angle: noise scales must be >= 0 and not both zero");
  }
  const CalibrationSolution init = solve_wlsq_angle(obs);

  struct Item {
    double beta, chi, eta, delta;
  };
  std::vector<Item> items;
  detail::BetaUnwrapper unwrap;
  for (const auto& o : obs) {
    if (o.eta <= 0.0) continue;
    items.push_back({unwrap(o), o.chi, o.eta, 0.0});
  }
  // Keep the unwrapped betas consistent with the wLSQ angle branch.
  double theta = init.theta.rad();
  {
    double mean_term = 0.0;
    for (const auto& it : items) mean_term += std::asin(it.chi) - it.beta;
    mean_term /= static_cast<double>(items.size());
    theta += kTwoPi * std::round((mean_term - theta) / kTwoPi);
  }
  double s_prime = init.s_prime;
  const double limit = 1.0 - kChiClampMargin;

  auto inner = [&](double x) { return std::clamp(s_prime * x, -limit, limit); };
  auto objective = [&](double th, double sp, const std::vector<Item>& its) {
    double total = 0.0;
    for (const auto& it : its) {
      const double f = std::asin(std::clamp(sp * (it.chi + it.delta), -limit, limit)) - th - it.beta;
      // With sigma_beta = 0 the constraint is met by the chi corrections.
      const double fb = sigma_beta > 0.0 ? f / sigma_beta : 0.0;
      const double fc = sigma_chi > 0.0 ? it.delta / sigma_chi : 0.0;
      total += it.eta * (fb * fb + fc * fc);
    }
    return total;
  };

  CalibrationSolution best = init;
  best.theta = Angle(theta);
  double best_obj = objective(theta, s_prime, items);
  best.converged = false;

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    Eigen::Matrix2d n = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    std::vector<double> f(items.size()), h(items.size()), a2(items.size()), b2(items.size());
    std::vector<Eigen::Vector2d> g(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& it = items[i];
      const double x = it.chi + it.delta;
      const double q = inner(x);
      const double root = std::sqrt(1.0 - q * q);
      f[i] = std::asin(q) - theta - it.beta;
      g[i] = Eigen::Vector2d(-1.0, x / root);
      h[i] = s_prime / root;
      double w;
      if (sigma_chi == 0.0) {
        a2[i] = it.eta / (sigma_beta * sigma_beta);
        b2[i] = std::numeric_limits<double>::infinity();
        w = a2[i];
      } else if (sigma_beta == 0.0) {
        a2[i] = std::numeric_limits<double>::infinity();
        b2[i] = it.eta / (sigma_chi * sigma_chi);
        w = b2[i] / (h[i] * h[i]);
      } else {
        a2[i] = it.eta / (sigma_beta * sigma_beta);
        b2[i] = it.eta / (sigma_chi * sigma_chi);
        w = a2[i] * b2[i] / (a2[i] * h[i] * h[i] + b2[i]);
      }
      const double e0 = f[i] - h[i] * it.delta;
      n += w * g[i] * g[i].transpose();
      rhs -= w * g[i] * e0;
    }
    if (!(n.determinant() > 1e-14 * n(0, 0) * n(1, 1))) break;
    const Eigen::Vector2d dp = n.ldlt().solve(rhs);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const double lin = f[i] + g[i].dot(dp);
      double dd;
      if (sigma_chi == 0.0) {
        dd = -items[i].delta;
      } else if (sigma_beta == 0.0) {
        dd = -lin / h[i];
      } else {
        dd = -(a2[i] * h[i] * lin + b2[i] * items[i].delta) / (a2[i] * h[i] * h[i] + b2[i]);
      }
      items[i].delta += dd;
    }
    theta += dp(0);
    s_prime += dp(1);

    const double obj = objective(theta, s_prime, items);
    const bool small_step = dp.norm() < cfg.step_tolerance;
    if (obj <= best_obj || small_step) {
      best_obj = std::min(obj, best_obj);
      best.theta = Angle(theta);
      best.s_prime = s_prime;
      best.iterations = iter;
    }
    if (small_step) {
      best.converged = true;
      break;
    }
  }
  if (init.residual_norm == 0.0 && best_obj == 0.0) best.converged = true;

  best.frames_used = static_cast<int>(items.size());
  double den = 0.0;
  for (const auto& it : items) den += it.eta;
  best.residual_norm = std::sqrt(best_obj / den) * (sigma_beta > 0.0 ? sigma_beta : sigma_chi);
  return best;
}

/// Default ODR noise scales propagated from the per-frame motion covariance:
/// d_beta ~ sqrt(Var) / |V| and d_chi ~ sqrt((x_s sigma_omega)^2 + (chi sqrt(Var))^2) / |V|,
/// each taken as the median over weighted frames.
struct OdrScales {
  double sigma_beta = 1.0;
  double sigma_chi = 1.0;
};

inline OdrScales odr_scales_from_covariance(std::span<const LateralObservation> obs, double x_s,
                                            double sigma_omega) {
  std::vector<double> sb, sc;
  for (const auto& o : obs) {
    if (o.eta <= 0.0) continue;
    const double sd = std::sqrt(1.0 / o.eta);
    sb.push_back(sd / o.speed_norm);
    const double imu = x_s * sigma_omega;
    sc.push_back(std::sqrt(imu * imu + o.chi * o.chi * sd * sd) / o.speed_norm);
  }
  auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  OdrScales s{median(sb), median(sc)};
  constexpr double kFloor = 1e-9;
  s.sigma_beta = std::max(s.sigma_beta, kFloor);
  s.sigma_chi = std::max(s.sigma_chi, kFloor);
  return s;
}

}  // namespace radcal
