#pragma once

// Simulation export and the single-scene estimation run shared by the CLI and
// the benchmark consistency checks.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "radcal/config.hpp"
#include "radcal/io.hpp"
#include "radcal/pipeline.hpp"
#include "radcal/report.hpp"
#include "radcal/sim.hpp"
#include "radcal/traj.hpp"

namespace radcal {

inline constexpr const char* kTruthFormat = "radcal-truth-v1";

/// Ground truth for a simulated scene: mount, IMU model, labels per frame and
/// the ego state at every radar frame.
inline nlohmann::json truth_json(const Scenario& sc) {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& l : sc.labels) labels.push_back(encode_labels(l));
  nlohmann::json ego = nlohmann::json::array();
  for (std::size_t idx : sc.frame_ego) {
    const EgoState& e = sc.ego[idx];
    ego.push_back({{"t", e.t},
                   {"x", e.position.x},
                   {"y", e.position.y},
                   {"heading", e.heading.rad()},
                   {"speed", e.speed},
                   {"yaw_rate", e.yaw_rate}});
  }
  nlohmann::json windows = nlohmann::json::array();
  for (const auto& w : sc.stationary_windows()) windows.push_back({{"begin", w.begin}, {"end", w.end}});
  const auto& m = sc.config.mount;
  return {
      {"format", kTruthFormat},
      {"mount", {{"x_s", m.x_s}, {"y_s", m.y_s}, {"theta_deg", m.theta.deg()}, {"theta_rad", m.theta.rad()}}},
      {"imu_model",
       {{"scale", sc.config.imu_model.scale},
        {"bias", sc.config.imu_model.bias},
        {"noise_std", sc.config.imu_model.noise_std}}},
      {"stationary_windows", windows},
      {"labels", labels},
      {"ego", ego},
      {"scenario", to_json(sc.config)},
  };
}

struct TruthFile {
  MountPose mount;
  ImuModel imu_model;
  std::vector<std::vector<DetectionLabel>> labels;
  Trajectory ego;  // at frame times
};

inline TruthFile parse_truth(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kTruthFormat) {
      throw Error(ErrorKind::Parse, "truth file: unsupported format '" + j.at("format").get<std::string>() + "'");
    }
    TruthFile t;
    const auto& m = j.at("mount");
    t.mount = {m.at("x_s").get<double>(), m.at("y_s").get<double>(), Angle(m.at("theta_rad").get<double>())};
    const auto& im = j.at("imu_model");
    t.imu_model = {im.at("scale").get<double>(), im.at("bias").get<double>(), im.at("noise_std").get<double>()};
    for (const auto& l : j.at("labels")) t.labels.push_back(decode_labels(l.get<std::string>()));
    for (const auto& e : j.at("ego")) {
      t.ego.poses.push_back({e.at("t").get<double>(), {e.at("x").get<double>(), e.at("y").get<double>()},
                             Angle(e.at("heading").get<double>())});
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("truth file: ") + e.what());
  }
}

inline TruthFile read_truth(const std::string& path) { return parse_truth(read_json(path)); }

/// radar.csv, imu.csv and truth.json in `dir`.
inline void write_simulation(const Scenario& sc, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + dir.string() + "': " + ec.message());
  write_radar_csv((dir / "radar.csv").string(), sc.frames);
  write_imu_csv((dir / "imu.csv").string(), sc.imu);
  write_json((dir / "truth.json").string(), truth_json(sc));
}

/// Full calibration of one recording. With a truth file the report also
/// carries the true angle and, when enabled, the RTE of every estimator's
/// reconstruction against the true ego path.
inline ResultsReport estimate_report(const std::vector<RadarFrame>& frames, const std::vector<ImuSample>& imu,
                                     const RunConfig& requested, const std::vector<WeightVector>* external = nullptr,
                                     const std::optional<TruthFile>& truth = std::nullopt) {
  const RunConfig run = canonical(requested);
  const FrameProducts products = process_frames(frames, imu, run.estimate, external);

  ResultsReport rep;
  rep.seed = run.seed;
  rep.config = to_json(run);
  rep.diagnostics = {
      {"frames", static_cast<int>(frames.size())},
      {"frames_gated_in", products.frames_gated_in()},
      {"frames_weighted", products.frames_weighted()},
      {"clamp_events", products.clamp_events()},
      {"bias_estimated", products.bias_estimated},
      {"imu_bias", products.bias},
      {"imu_noise_std", products.imu_noise_std},
      {"stationary_windows", static_cast<int>(products.stationary.size())},
  };
  rep.solutions = solve_estimators(products, run.estimate);

  if (truth) {
    rep.truth = Truth{truth->mount.theta.deg(), 1.0 / truth->imu_model.scale};
    if (run.rte.enabled && truth->ego.size() == frames.size()) {
      std::vector<RteRow> rows;
      const Pose2 start = truth->ego.poses.front();
      for (const auto& [name, s] : rep.solutions) {
        if (!s.ok) continue;
        MountPose mount{run.estimate.mount_x_s, run.estimate.mount_y_s, s.solution.theta};
        std::vector<double> yaw = products.yaw_rates;
        for (double& w : yaw) w *= s.solution.s_prime;
        try {
          const Trajectory est = reconstruct_trajectory(products.motions, mount, yaw, start);
          const auto segs = rte_segments(est, truth->ego, run.rte.config);
          double sum = 0.0;
          for (double e : segs) sum += e;
          rows.push_back({rad2deg(wrap_pi(s.solution.theta.rad() - truth->mount.theta.rad())),
                          sum / static_cast<double>(segs.size()), static_cast<int>(segs.size()), name});
        } catch (const Error& e) {
          rep.diagnostics["rte_note"] = e.what();
        }
      }
      if (!rows.empty()) rep.rte = rows;
    }
  }
  return rep;
}

}  // namespace radcal
