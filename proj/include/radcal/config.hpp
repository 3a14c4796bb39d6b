#pragma once

// RunConfig: the single JSON document every CLI subcommand reads. All
// sections are optional and fall back to defaults; unknown keys and
// out-of-range values are reported together in one validation error.
//
// {
//   "seed": 42,
//   "scenario":  { ... ScenarioConfig ... },
//   "estimate":  { ... EstimateConfig ... },
//   "rte":       { "enabled": true, "segment_length_m": 50, "align_heading": true },
//   "benchmark": { ... BenchmarkConfig ... }
// }

#include <nlohmann/json.hpp>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "radcal/error.hpp"
#include "radcal/io.hpp"
#include "radcal/pipeline.hpp"
#include "radcal/sim.hpp"
#include "radcal/traj.hpp"

namespace radcal {

inline constexpr const char* kToolkitVersion = "radcal 1.0.0";

struct RteSettings {
  bool enabled = true;
  RteConfig config;
};

struct BenchmarkConfig {
  int seeds = 20;
  std::vector<double> noise_levels{0.1};  // sigma_doppler, m/s
  std::vector<double> mover_fractions{0.0, 0.2, 0.4, 0.6};  // of detections per frame
  std::vector<double> intervals_s{5.0, 10.0, 25.0, 60.0};
  double scene_duration_s = 64.0;  // driving time after the start-up
  int detections_per_frame = 60;
  double clutter_fraction = 0.1;
  bool unweighted_baseline = true;
  std::vector<double> rte_bias_deg{0.0, 0.05, 0.1, 0.5};
  double rte_route_length_m = 2000.0;
};

struct RunConfig {
  std::uint64_t seed = 42;
  ScenarioConfig scenario;
  EstimateConfig estimate;
  RteSettings rte;
  BenchmarkConfig benchmark;

  RunConfig() { apply_seed(seed); }

  /// Propagates the top-level seed into the scenario and RANSAC streams.
  void apply_seed(std::uint64_t s) {
    seed = s;
    scenario.seed = s;
    estimate.ransac.seed = s;
  }
};

namespace detail {

/// Strict object reader: remembers which keys were consumed so leftovers can
/// be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string path, std::vector<std::string>& errs)
      : j_(j), path_(std::move(path)), errs_(errs) {
    if (!j_.is_object()) errs_.push_back(path_ + ": expected an object");
  }

  ~ObjectReader() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) errs_.push_back(path_ + "." + it.key() + ": unknown key");
    }
  }

  ObjectReader(const ObjectReader&) = delete;
  ObjectReader& operator=(const ObjectReader&) = delete;

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.is_object() && j_.contains(key);
  }
  const nlohmann::json& at(const std::string& key) const { return j_.at(key); }
  std::string where(const std::string& key) const { return path_ + "." + key; }

  void num(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) {
      errs_.push_back(where(key) + ": expected a number");
      return;
    }
    out = v.get<double>();
  }
  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) {
      errs_.push_back(where(key) + ": expected an integer");
      return;
    }
    out = v.get<int>();
  }
  void u64(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      errs_.push_back(where(key) + ": expected a non-negative integer");
      return;
    }
    out = v.get<std::uint64_t>();
  }
  /// Degrees in the document, radians in memory.
  void degrees(const std::string& key, double& radians) {
    if (!has(key)) return;
    if (!j_.at(key).is_number()) {
      errs_.push_back(where(key) + ": expected a number");
      return;
    }
    radians = deg2rad(j_.at(key).get<double>());
  }
  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_boolean()) {
      errs_.push_back(where(key) + ": expected true/false");
      return;
    }
    out = v.get<bool>();
  }
  void str(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_string()) {
      errs_.push_back(where(key) + ": expected a string");
      return;
    }
    out = v.get<std::string>();
  }
  void nums(const std::string& key, std::vector<double>& out) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_array()) {
      errs_.push_back(where(key) + ": expected an array of numbers");
      return;
    }
    std::vector<double> tmp;
    for (const auto& e : v) {
      if (!e.is_number()) {
        errs_.push_back(where(key) + ": expected an array of numbers");
        return;
      }
      tmp.push_back(e.get<double>());
    }
    out = std::move(tmp);
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string>& errs_;
  std::set<std::string> seen_;
};

inline void require(std::vector<std::string>& errs, bool ok, const std::string& msg) {
  if (!ok) errs.push_back(msg);
}

inline void read_scenario(const nlohmann::json& j, ScenarioConfig& c, std::vector<std::string>& errs) {
  ObjectReader r(j, "scenario", errs);
  r.num("duration_s", c.duration);
  r.num("frame_rate_hz", c.frame_rate);
  r.num("imu_rate_hz", c.imu_rate);
  r.u64("seed", c.seed);
  if (r.has("mount")) {
    ObjectReader m(r.at("mount"), "scenario.mount", errs);
    m.num("x_s", c.mount.x_s);
    m.num("y_s", c.mount.y_s);
    double theta = c.mount.theta.rad();
    m.degrees("theta_deg", theta);
    c.mount.theta = Angle(theta);
  }
  if (r.has("imu_model")) {
    ObjectReader m(r.at("imu_model"), "scenario.imu_model", errs);
    m.num("scale", c.imu_model.scale);
    m.num("bias", c.imu_model.bias);
    m.num("noise_std", c.imu_model.noise_std);
  }
  r.num("stationary_duration_s", c.stationary_duration);
  if (r.has("segments")) {
    const auto& arr = r.at("segments");
    if (!arr.is_array()) {
      errs.push_back("scenario.segments: expected an array");
    } else {
      c.segments.clear();
      for (std::size_t i = 0; i < arr.size(); ++i) {
        TrajectorySegment s;
        ObjectReader m(arr[i], "scenario.segments[" + std::to_string(i) + "]", errs);
        m.num("duration_s", s.duration);
        m.num("speed_start", s.speed_start);
        m.num("speed_end", s.speed_end);
        m.num("yaw_rate_start", s.yaw_rate_start);
        m.num("yaw_rate_end", s.yaw_rate_end);
        c.segments.push_back(s);
      }
    }
  }
  r.integer("static_density", c.static_density);
  r.integer("mover_count", c.mover_count);
  r.integer("mover_groups", c.mover_groups);
  r.num("mover_speed_min", c.mover_speed_min);
  r.num("mover_speed_max", c.mover_speed_max);
  r.num("clutter_ratio", c.clutter_ratio);
  r.num("clutter_doppler_max", c.clutter_doppler_max);
  if (r.has("noise")) {
    ObjectReader m(r.at("noise"), "scenario.noise", errs);
    m.degrees("sigma_azimuth_deg", c.noise.sigma_azimuth);
    m.num("sigma_doppler", c.noise.sigma_doppler);
    m.num("accel_doppler_coeff", c.noise.accel_doppler_coeff);
  }
  r.degrees("fov_half_angle_deg", c.fov_half_angle);
}

inline void read_estimate(const nlohmann::json& j, EstimateConfig& c, std::vector<std::string>& errs) {
  ObjectReader r(j, "estimate", errs);
  if (r.has("mount")) {
    ObjectReader m(r.at("mount"), "estimate.mount", errs);
    m.num("x_s", c.mount_x_s);
    m.num("y_s", c.mount_y_s);
  }
  if (r.has("ransac")) {
    ObjectReader m(r.at("ransac"), "estimate.ransac", errs);
    m.num("doppler_threshold", c.ransac.doppler_threshold);
    m.integer("iterations", c.ransac.iterations);
    m.integer("min_inliers", c.ransac.min_inliers);
    m.u64("seed", c.ransac.seed);
  }
  if (r.has("motion")) {
    ObjectReader m(r.at("motion"), "estimate.motion", errs);
    m.num("inlier_threshold", c.motion.inlier_threshold);
    m.num("inlier_ratio_threshold", c.motion.inlier_ratio_threshold);
  }
  if (r.has("gate")) {
    ObjectReader m(r.at("gate"), "estimate.gate", errs);
    m.num("min_speed", c.gate.min_speed);
    m.degrees("max_yaw_rate_deg", c.gate.max_yaw_rate);
  }
  if (r.has("stationary")) {
    ObjectReader m(r.at("stationary"), "estimate.stationary", errs);
    m.num("speed_threshold", c.stationary.speed_threshold);
    m.num("min_duration_s", c.stationary.min_duration);
    m.integer("median_window", c.stationary_median_window);
  }
  std::string ws = to_string(c.weight_source);
  r.str("weight_source", ws);
  try {
    c.weight_source = parse_weight_source(ws);
  } catch (const Error& e) {
    errs.push_back(std::string("estimate.weight_source: ") + e.what());
  }
  if (r.has("estimators")) {
    const auto& v = r.at("estimators");
    std::vector<std::string> names;
    if (v.is_string()) {
      try {
        names = parse_estimators(v.get<std::string>());
      } catch (const Error& e) {
        errs.push_back(std::string("estimate.estimators: ") + e.what());
      }
    } else if (v.is_array()) {
      for (const auto& e : v) {
        if (!e.is_string()) {
          errs.push_back("estimate.estimators: expected strings");
          continue;
        }
        try {
          for (const auto& n : parse_estimators(e.get<std::string>())) names.push_back(n);
        } catch (const Error& ex) {
          errs.push_back(std::string("estimate.estimators: ") + ex.what());
        }
      }
    } else {
      errs.push_back("estimate.estimators: expected a name or an array of names");
    }
    if (!names.empty()) c.estimators = names;
  }
  r.boolean("kabsch_two_pass", c.kabsch_two_pass);
  if (r.has("odr")) {
    ObjectReader m(r.at("odr"), "estimate.odr", errs);
    if (m.has("sigma_beta")) {
      double v = 0.0;
      m.num("sigma_beta", v);
      c.odr_sigma_beta = v;
    }
    if (m.has("sigma_chi")) {
      double v = 0.0;
      m.num("sigma_chi", v);
      c.odr_sigma_chi = v;
    }
  }
  require(errs, c.mount_x_s != 0.0, "estimate.mount.x_s must be non-zero (angle unobservable at x_s = 0)");
  require(errs, c.ransac.doppler_threshold > 0.0, "estimate.ransac.doppler_threshold must be > 0");
  require(errs, c.ransac.iterations > 0, "estimate.ransac.iterations must be > 0");
  require(errs, c.ransac.min_inliers >= 2, "estimate.ransac.min_inliers must be >= 2");
  require(errs, c.motion.inlier_threshold > 0.0 && c.motion.inlier_threshold <= 1.0,
          "estimate.motion.inlier_threshold must lie in (0, 1]");
  require(errs, c.motion.inlier_ratio_threshold >= 0.0 && c.motion.inlier_ratio_threshold <= 1.0,
          "estimate.motion.inlier_ratio_threshold must lie in [0, 1]");
  require(errs, c.gate.min_speed >= 0.0, "estimate.gate.min_speed must be >= 0");
  require(errs, c.gate.max_yaw_rate > 0.0, "estimate.gate.max_yaw_rate_deg must be > 0");
  require(errs, c.stationary.speed_threshold > 0.0, "estimate.stationary.speed_threshold must be > 0");
  require(errs, c.stationary.min_duration >= 0.0, "estimate.stationary.min_duration_s must be >= 0");
  require(errs, c.stationary_median_window >= 1, "estimate.stationary.median_window must be >= 1");
  if (c.odr_sigma_beta) require(errs, *c.odr_sigma_beta >= 0.0, "estimate.odr.sigma_beta must be >= 0");
  if (c.odr_sigma_chi) require(errs, *c.odr_sigma_chi >= 0.0, "estimate.odr.sigma_chi must be >= 0");
}

inline void read_rte(const nlohmann::json& j, RteSettings& c, std::vector<std::string>& errs) {
  ObjectReader r(j, "rte", errs);
  r.boolean("enabled", c.enabled);
  r.num("segment_length_m", c.config.segment_length);
  r.boolean("align_heading", c.config.align_heading);
  require(errs, c.config.segment_length > 0.0, "rte.segment_length_m must be > 0");
}

inline void read_benchmark(const nlohmann::json& j, BenchmarkConfig& c, std::vector<std::string>& errs) {
  ObjectReader r(j, "benchmark", errs);
  r.integer("seeds", c.seeds);
  r.nums("noise_levels", c.noise_levels);
  r.nums("mover_fractions", c.mover_fractions);
  r.nums("intervals_s", c.intervals_s);
  r.num("scene_duration_s", c.scene_duration_s);
  r.integer("detections_per_frame", c.detections_per_frame);
  r.num("clutter_fraction", c.clutter_fraction);
  r.boolean("unweighted_baseline", c.unweighted_baseline);
  r.nums("rte_bias_deg", c.rte_bias_deg);
  r.num("rte_route_length_m", c.rte_route_length_m);
  require(errs, c.seeds >= 1, "benchmark.seeds must be >= 1");
  require(errs, !c.noise_levels.empty(), "benchmark.noise_levels must not be empty");
  for (double v : c.noise_levels) require(errs, v >= 0.0, "benchmark.noise_levels must be >= 0");
  require(errs, !c.mover_fractions.empty(), "benchmark.mover_fractions must not be empty");
  for (double v : c.mover_fractions)
    require(errs, v >= 0.0 && v < 1.0, "benchmark.mover_fractions must lie in [0, 1)");
  for (double v : c.intervals_s) require(errs, v > 0.0, "benchmark.intervals_s must be > 0");
  require(errs, c.scene_duration_s > 0.0, "benchmark.scene_duration_s must be > 0");
  require(errs, c.detections_per_frame >= 2, "benchmark.detections_per_frame must be >= 2");
  require(errs, c.clutter_fraction >= 0.0 && c.clutter_fraction < 1.0,
          "benchmark.clutter_fraction must lie in [0, 1)");
  for (double f : c.mover_fractions)
    require(errs, f + c.clutter_fraction < 1.0, "benchmark: mover + clutter fractions must be < 1");
  require(errs, c.rte_route_length_m > 0.0, "benchmark.rte_route_length_m must be > 0");
}

}  // namespace detail

/// Parses and validates a RunConfig document; throws one Validation error
/// listing every problem found.
inline RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  std::vector<std::string> errs;
  {
    detail::ObjectReader r(j, "config", errs);
    // Section-level seeds are read afterwards and win over the top-level one.
    r.u64("seed", c.seed);
    c.apply_seed(c.seed);
    if (r.has("scenario")) detail::read_scenario(r.at("scenario"), c.scenario, errs);
    if (r.has("estimate")) detail::read_estimate(r.at("estimate"), c.estimate, errs);
    if (r.has("rte")) detail::read_rte(r.at("rte"), c.rte, errs);
    if (r.has("benchmark")) detail::read_benchmark(r.at("benchmark"), c.benchmark, errs);
  }
  for (const auto& e : validate(c.scenario)) errs.push_back("scenario: " + e);
  if (!errs.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw Error(ErrorKind::Validation, msg);
  }
  return c;
}

inline nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : c.segments) {
    segs.push_back({{"duration_s", s.duration},
                    {"speed_start", s.speed_start},
                    {"speed_end", s.speed_end},
                    {"yaw_rate_start", s.yaw_rate_start},
                    {"yaw_rate_end", s.yaw_rate_end}});
  }
  return {
      {"duration_s", c.duration},
      {"frame_rate_hz", c.frame_rate},
      {"imu_rate_hz", c.imu_rate},
      {"seed", c.seed},
      {"mount", {{"x_s", c.mount.x_s}, {"y_s", c.mount.y_s}, {"theta_deg", c.mount.theta.deg()}}},
      {"imu_model",
       {{"scale", c.imu_model.scale}, {"bias", c.imu_model.bias}, {"noise_std", c.imu_model.noise_std}}},
      {"stationary_duration_s", c.stationary_duration},
      {"segments", segs},
      {"static_density", c.static_density},
      {"mover_count", c.mover_count},
      {"mover_groups", c.mover_groups},
      {"mover_speed_min", c.mover_speed_min},
      {"mover_speed_max", c.mover_speed_max},
      {"clutter_ratio", c.clutter_ratio},
      {"clutter_doppler_max", c.clutter_doppler_max},
      {"noise",
       {{"sigma_azimuth_deg", rad2deg(c.noise.sigma_azimuth)},
        {"sigma_doppler", c.noise.sigma_doppler},
        {"accel_doppler_coeff", c.noise.accel_doppler_coeff}}},
      {"fov_half_angle_deg", rad2deg(c.fov_half_angle)},
  };
}

inline nlohmann::json to_json(const EstimateConfig& c) {
  nlohmann::json j = {
      {"mount", {{"x_s", c.mount_x_s}, {"y_s", c.mount_y_s}}},
      {"ransac",
       {{"doppler_threshold", c.ransac.doppler_threshold},
        {"iterations", c.ransac.iterations},
        {"min_inliers", c.ransac.min_inliers},
        {"seed", c.ransac.seed}}},
      {"motion",
       {{"inlier_threshold", c.motion.inlier_threshold},
        {"inlier_ratio_threshold", c.motion.inlier_ratio_threshold}}},
      {"gate", {{"min_speed", c.gate.min_speed}, {"max_yaw_rate_deg", rad2deg(c.gate.max_yaw_rate)}}},
      {"stationary",
       {{"speed_threshold", c.stationary.speed_threshold},
        {"min_duration_s", c.stationary.min_duration},
        {"median_window", c.stationary_median_window}}},
      {"weight_source", to_string(c.weight_source)},
      {"estimators", c.estimators},
      {"kabsch_two_pass", c.kabsch_two_pass},
  };
  if (c.odr_sigma_beta || c.odr_sigma_chi) {
    nlohmann::json odr = nlohmann::json::object();
    if (c.odr_sigma_beta) odr["sigma_beta"] = *c.odr_sigma_beta;
    if (c.odr_sigma_chi) odr["sigma_chi"] = *c.odr_sigma_chi;
    j["odr"] = odr;
  }
  return j;
}

inline nlohmann::json to_json(const BenchmarkConfig& c) {
  return {
      {"seeds", c.seeds},
      {"noise_levels", c.noise_levels},
      {"mover_fractions", c.mover_fractions},
      {"intervals_s", c.intervals_s},
      {"scene_duration_s", c.scene_duration_s},
      {"detections_per_frame", c.detections_per_frame},
      {"clutter_fraction", c.clutter_fraction},
      {"unweighted_baseline", c.unweighted_baseline},
      {"rte_bias_deg", c.rte_bias_deg},
      {"rte_route_length_m", c.rte_route_length_m},
  };
}

inline nlohmann::json to_json(const RunConfig& c) {
  return {
      {"seed", c.seed},
      {"scenario", to_json(c.scenario)},
      {"estimate", to_json(c.estimate)},
      {"rte",
       {{"enabled", c.rte.enabled},
        {"segment_length_m", c.rte.config.segment_length},
        {"align_heading", c.rte.config.align_heading}}},
      {"benchmark", to_json(c.benchmark)},
  };
}

/// The config as it reads back from its own echo in a report (floats at 12
/// significant digits, angles through degrees). Computing from this form is
/// what makes a report reproducible from the config it carries.
inline RunConfig canonical(const RunConfig& c) {
  nlohmann::json j = to_json(c);
  round_floats(j);
  return parse_run_config(j);
}

}  // namespace radcal
