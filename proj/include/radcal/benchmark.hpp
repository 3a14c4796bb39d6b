#pragma once

// Monte-Carlo sweeps over seeds x noise level x mover fraction, the
// convergence-vs-interval tables and the RTE-vs-angle-bias sweep.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "radcal/config.hpp"
#include "radcal/pipeline.hpp"
#include "radcal/report.hpp"
#include "radcal/sim.hpp"
#include "radcal/traj.hpp"

namespace radcal {

inline constexpr const char* kUnweightedBaseline = "wlsq_unweighted";

/// Accelerate 0 -> 10 m/s over 3 s, then repeat a 12 s cycle of left and right
/// turns with mild speed changes until `drive_duration` is filled. The last
/// segment is cut short (with proportionally cut ramps) when needed.
inline std::vector<TrajectorySegment> mixed_drive(double drive_duration) {
  static const std::vector<TrajectorySegment> cycle{
      {2.0, 10.0, 11.0, 0.0, 0.3},    {2.0, 11.0, 11.0, 0.3, 0.3},
      {2.0, 11.0, 11.0, 0.3, -0.25},  {2.0, 11.0, 9.0, -0.25, -0.25},
      {2.0, 9.0, 9.0, -0.25, 0.1},    {2.0, 9.0, 10.0, 0.1, 0.0},
  };
  std::vector<TrajectorySegment> out;
  double left = drive_duration;
  auto push = [&](TrajectorySegment s) {
    if (left <= 1e-12) return;
    if (s.duration > left) {
      const double a = left / s.duration;
      s.speed_end = s.speed_start + a * (s.speed_end - s.speed_start);
      s.yaw_rate_end = s.yaw_rate_start + a * (s.yaw_rate_end - s.yaw_rate_start);
      s.duration = left;
    }
    out.push_back(s);
    left -= s.duration;
  };
  push({3.0, 0.0, 10.0, 0.0, 0.0});
  while (left > 1e-12) {
    for (const auto& s : cycle) push(s);
  }
  return out;
}

/// Detections per frame split into clutter, movers and statics.
struct Composition {
  int statics = 0;
  int movers = 0;
  double clutter_ratio = 0.0;
};

inline Composition compose(int detections, double mover_fraction, double clutter_fraction) {
  const int clutter = static_cast<int>(std::lround(clutter_fraction * detections));
  const int movers = static_cast<int>(std::lround(mover_fraction * detections));
  Composition c;
  c.movers = movers;
  c.statics = std::max(0, detections - clutter - movers);
  const int rest = c.statics + c.movers;
  // ScenarioConfig derives its clutter count from the ratio of the total.
  c.clutter_ratio = rest + clutter > 0 ? static_cast<double>(clutter) / (rest + clutter) : 0.0;
  return c;
}

struct CellKey {
  double noise_level = 0.0;
  double mover_fraction = 0.0;
  int seed_index = 0;
};

/// Scenario for one sweep cell, derived from the run's scenario section.
inline ScenarioConfig cell_scenario(const RunConfig& run, const CellKey& key) {
  const auto& b = run.benchmark;
  ScenarioConfig c = run.scenario;
  c.segments = mixed_drive(b.scene_duration_s);
  c.duration = c.stationary_duration + b.scene_duration_s;
  const Composition comp = compose(b.detections_per_frame, key.mover_fraction, b.clutter_fraction);
  c.static_density = comp.statics;
  c.mover_count = comp.movers;
  c.clutter_ratio = comp.clutter_ratio;
  c.noise.sigma_doppler = key.noise_level;
  c.seed = run.seed + static_cast<std::uint64_t>(key.seed_index);
  return c;
}

/// Estimation settings for one cell: the run's estimate section with the mount
/// lever arm taken from the simulated truth and the cell seed for RANSAC.
inline EstimateConfig cell_estimate(const RunConfig& run, const ScenarioConfig& sc) {
  EstimateConfig e = run.estimate;
  e.mount_x_s = sc.mount.x_s;
  e.mount_y_s = sc.mount.y_s;
  e.ransac.seed = sc.seed;
  return e;
}

struct CellResult {
  CellKey key;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  SolutionSet full;
  std::optional<EstimatorSolution> baseline;
  // interval index -> estimator -> solution (absent when the window failed)
  std::vector<std::map<std::string, EstimatorSolution>> windows;
};

inline CellResult run_cell(const RunConfig& run, const CellKey& key) {
  CellResult r;
  r.key = key;
  const ScenarioConfig sc = cell_scenario(run, key);
  r.seed = sc.seed;
  try {
    const Scenario scene = generate_scenario(sc);
    const EstimateConfig est = cell_estimate(run, sc);
    const FrameProducts products = process_frames(scene.frames, scene.imu, est);
    r.full = solve_estimators(products, est);
    const double t0 = sc.stationary_duration;
    for (double interval : run.benchmark.intervals_s) {
      std::map<std::string, EstimatorSolution> w;
      try {
        w = solve_estimators(products, est, t0, t0 + interval);
      } catch (const Error&) {
      }
      r.windows.push_back(std::move(w));
    }
    if (run.benchmark.unweighted_baseline) {
      EstimateConfig unit = est;
      unit.weight_source = WeightSource::Unit;
      unit.estimators = {"wlsq"};
      try {
        const auto p = process_frames(scene.frames, scene.imu, unit);
        r.baseline = solve_estimators(p, unit).at("wlsq");
      } catch (const Error&) {
      }
    }
    r.ok = true;
  } catch (const Error& e) {
    r.error = e.what();
  }
  return r;
}

/// Noise-free route of about `route_length` m at 10 m/s; the radar motion is
/// exact and only the mounting angle used for reconstruction is perturbed.
inline std::vector<RteRow> rte_sweep(const RunConfig& run) {
  const auto& b = run.benchmark;
  const ScenarioConfig& base = run.scenario;
  // 3 s ramp covers 15 m; the cycles average about 10 m/s.
  const double drive = 3.0 + (b.rte_route_length_m - 15.0) / 10.0;
  const TrajectoryProfile profile(0.0, mixed_drive(drive));
  const double dt = 1.0 / base.imu_rate;
  const auto ego = integrate_trajectory(profile, drive, dt);

  std::vector<MotionEstimate> motions;
  std::vector<double> yaw;
  Trajectory reference;
  std::size_t last = static_cast<std::size_t>(-1);
  for (std::size_t k = 0;; ++k) {
    const double nominal = static_cast<double>(k) / base.frame_rate;
    const auto idx = static_cast<std::size_t>(std::llround(nominal * base.imu_rate));
    if (idx >= ego.size()) break;
    if (idx == last) continue;
    last = idx;
    const EgoState& e = ego[idx];
    MotionEstimate m;
    m.t = e.t;
    m.v = radar_velocity(e, base.mount);
    m.sparse = false;
    motions.push_back(m);
    yaw.push_back(e.yaw_rate);
    reference.poses.push_back({e.t, e.position, e.heading});
  }

  std::vector<RteRow> rows;
  for (double bias : b.rte_bias_deg) {
    MountPose mount = base.mount;
    mount.theta = base.mount.theta + Angle::from_degrees(bias);
    const Trajectory est = reconstruct_trajectory(motions, mount, yaw);
    const auto segs = rte_segments(est, reference, run.rte.config);
    double sum = 0.0;
    for (double s : segs) sum += s;
    rows.push_back({bias, sum / static_cast<double>(segs.size()), static_cast<int>(segs.size()), {}});
  }
  return rows;
}

/// Signed angle error in degrees, wrapped.
inline double angle_error_deg(const Angle& estimate, const Angle& truth) {
  return rad2deg(wrap_pi(estimate.rad() - truth.rad()));
}

struct BenchmarkOutput {
  ResultsReport report;
  std::vector<CellResult> cells;
};

inline BenchmarkOutput run_benchmark(const RunConfig& requested, int jobs = 1) {
  const RunConfig run = canonical(requested);
  const auto& b = run.benchmark;
  std::vector<CellKey> keys;
  for (double noise : b.noise_levels)
    for (double movers : b.mover_fractions)
      for (int i = 0; i < b.seeds; ++i) keys.push_back({noise, movers, i});

  BenchmarkOutput out;
  out.cells.resize(keys.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < keys.size(); i = next++) out.cells[i] = run_cell(run, keys[i]);
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(keys.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ResultsReport& rep = out.report;
  rep.seed = run.seed;
  rep.config = to_json(run);
  rep.truth = Truth{run.scenario.mount.theta.deg(), 1.0 / run.scenario.imu_model.scale};
  const Angle truth = run.scenario.mount.theta;

  std::vector<std::string> names = run.estimate.estimators;
  if (b.unweighted_baseline) names.push_back(kUnweightedBaseline);

  using Group = std::tuple<std::string, double, double>;
  std::map<Group, std::vector<double>> full_err;
  std::map<std::tuple<std::string, double, double, std::size_t>, std::vector<double>> win_err;

  for (const auto& c : out.cells) {
    if (!c.ok) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "noise=%g movers=%g seed=%llu: ", c.key.noise_level,
                    c.key.mover_fraction, static_cast<unsigned long long>(c.seed));
      rep.failed_cells.push_back(buf + c.error);
      continue;
    }
    auto add_scene = [&](const std::string& name, const EstimatorSolution& s) {
      if (!s.ok) return;
      const double err = angle_error_deg(s.solution.theta, truth);
      rep.scenes.push_back({c.seed, c.key.noise_level, c.key.mover_fraction, name,
                            s.solution.theta.deg(), s.solution.s_prime, err, s.fallback});
      full_err[{name, c.key.noise_level, c.key.mover_fraction}].push_back(err);
    };
    for (const auto& name : run.estimate.estimators) {
      if (auto it = c.full.find(name); it != c.full.end()) add_scene(name, it->second);
    }
    if (c.baseline) add_scene(kUnweightedBaseline, *c.baseline);
    for (std::size_t w = 0; w < c.windows.size(); ++w) {
      for (const auto& [name, s] : c.windows[w]) {
        if (!s.ok) continue;
        win_err[{name, c.key.noise_level, c.key.mover_fraction, w}].push_back(
            angle_error_deg(s.solution.theta, truth));
      }
    }
  }

  for (const auto& name : names) {
    for (double noise : b.noise_levels) {
      for (double movers : b.mover_fractions) {
        auto it = full_err.find({name, noise, movers});
        if (it != full_err.end()) rep.summary.push_back({name, noise, movers, summarize(it->second)});
        if (name == kUnweightedBaseline) continue;
        for (std::size_t w = 0; w < b.intervals_s.size(); ++w) {
          auto wt = win_err.find({name, noise, movers, w});
          if (wt == win_err.end()) continue;
          rep.intervals.push_back({name, noise, movers, b.intervals_s[w], summarize(wt->second)});
        }
      }
    }
  }

  if (run.rte.enabled) {
    try {
      rep.rte = rte_sweep(run);
    } catch (const Error& e) {
      rep.failed_cells.push_back(std::string("rte sweep: ") + e.what());
    }
  }

  rep.diagnostics = {{"cells", static_cast<int>(out.cells.size())},
                     {"cells_failed", static_cast<int>(std::count_if(
                                          out.cells.begin(), out.cells.end(),
                                          [](const CellResult& c) { return !c.ok; }))}};
  return out;
}

namespace detail {

inline std::string g12(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

}  // namespace detail

/// Plot-ready tables next to the report.
inline void write_benchmark_tables(const ResultsReport& rep, const std::filesystem::path& dir) {
  using detail::g12;
  std::string mae = "# radcal-v1\nestimator,noise_level,mover_fraction,interval_s,n,mae_deg\n";
  std::string var = "# radcal-v1\nestimator,noise_level,mover_fraction,interval_s,n,variance_deg2\n";
  for (const auto& r : rep.intervals) {
    const std::string head = r.estimator + "," + g12(r.noise_level) + "," + g12(r.mover_fraction) + "," +
                             g12(r.interval_s) + "," + std::to_string(r.stats.n) + ",";
    mae += head + g12(r.stats.mae_deg) + "\n";
    var += head + g12(r.stats.variance_deg2) + "\n";
  }
  detail::write_text(dir / "mae_vs_interval.csv", mae);
  detail::write_text(dir / "variance_vs_interval.csv", var);

  std::string scenes =
      "# radcal-v1\nseed,noise_level,mover_fraction,estimator,theta_deg,error_deg,s_prime,fallback\n";
  for (const auto& s : rep.scenes) {
    scenes += std::to_string(s.seed) + "," + g12(s.noise_level) + "," + g12(s.mover_fraction) + "," +
              s.estimator + "," + g12(s.theta_deg) + "," + g12(s.error_deg) + "," + g12(s.s_prime) + "," +
              (s.fallback ? "1" : "0") + "\n";
  }
  detail::write_text(dir / "theta_per_scene.csv", scenes);

  std::string sweep = "# radcal-v1\nestimator,noise_level,mover_fraction,n,mean_error_deg,mae_deg,variance_deg2\n";
  for (const auto& g : rep.summary) {
    sweep += g.estimator + "," + g12(g.noise_level) + "," + g12(g.mover_fraction) + "," +
             std::to_string(g.stats.n) + "," + g12(g.stats.mean_error_deg) + "," + g12(g.stats.mae_deg) +
             "," + g12(g.stats.variance_deg2) + "\n";
  }
  detail::write_text(dir / "outlier_sweep.csv", sweep);

  if (rep.rte) {
    std::string rte = "# radcal-v1\nbias_deg,rte_m,segments\n";
    for (const auto& r : *rep.rte) {
      rte += g12(r.bias_deg) + "," + g12(r.rte_m) + "," + std::to_string(r.segments) + "\n";
    }
    detail::write_text(dir / "rte_vs_bias.csv", rte);
  }
}

}  // namespace radcal
