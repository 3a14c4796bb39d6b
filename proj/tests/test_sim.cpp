#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "radcal/pipeline.hpp"
#include "radcal/sim.hpp"
#include "support.hpp"

using namespace radcal;
using support::kind_of;

namespace {

ScenarioConfig clean_config(double theta_deg, double scale = 1.0) {
  ScenarioConfig c;
  c.mount.theta = Angle::from_degrees(theta_deg);
  c.imu_model = {scale, 0.01, 0.0};
  c.noise = {0.0, 0.0, 0.0};
  c.mover_count = 0;
  c.clutter_ratio = 0.0;
  return c;
}

SolutionSet solve_all(const Scenario& sc) {
  EstimateConfig e;
  e.mount_x_s = sc.config.mount.x_s;
  e.mount_y_s = sc.config.mount.y_s;
  e.estimators = all_estimators();
  e.ransac.seed = sc.config.seed;
  return solve_estimators(process_frames(sc.frames, sc.imu, e), e);
}

}  // namespace

TEST(IntegrateTrajectory, StraightLine) {
  const TrajectoryProfile p(0.0, {{10.0, 10.0, 10.0, 0.0, 0.0}});
  const auto ego = integrate_trajectory(p, 10.0, 0.01);
  EXPECT_NEAR(ego.back().t, 10.0, 1e-12);
  EXPECT_NEAR(ego.back().position.x, 100.0, 1e-9);
  EXPECT_NEAR(ego.back().position.y, 0.0, 1e-12);
  EXPECT_EQ(ego.back().heading.rad(), 0.0);
}

TEST(IntegrateTrajectory, CircleCloses) {
  const double dt = 0.01;
  const double period = 2.0 * oracle::pi / 0.5;
  const TrajectoryProfile p(0.0, {{100.0, 10.0, 10.0, 0.5, 0.5}});
  const auto ego = integrate_trajectory(p, period, dt);
  EXPECT_LT(ego.back().position.norm(), 10.0 * dt);
  // every pose on the analytic circle of radius v / omega = 20 m about (0, 20)
  for (const auto& e : ego) ASSERT_NEAR((e.position - Vec2{0.0, 20.0}).norm(), 20.0, 1e-4);
}

TEST(IntegrateTrajectory, SpeedRamp) {
  const TrajectoryProfile p(0.0, {{10.0, 0.0, 10.0, 0.0, 0.0}});
  const auto ego = integrate_trajectory(p, 10.0, 0.01);
  EXPECT_NEAR(ego.back().position.x, 50.0, 0.01 * 10.0);
}

TEST(IntegrateTrajectory, SegmentBoundariesExact) {
  const TrajectoryProfile p(1.0, {{2.0, 0.0, 4.0, 0.0, 0.2}, {3.0, 4.0, 1.0, 0.2, -0.1}});
  const auto ego = integrate_trajectory(p, 8.0, 0.01);
  auto at = [&](double t) { return ego[static_cast<std::size_t>(std::llround(t / 0.01))]; };
  EXPECT_EQ(at(0.5).speed, 0.0);
  EXPECT_NEAR(at(3.0).speed, 4.0, 1e-12);
  EXPECT_NEAR(at(3.0).yaw_rate, 0.2, 1e-12);
  EXPECT_NEAR(at(6.0).speed, 1.0, 1e-12);
  EXPECT_NEAR(at(7.5).yaw_rate, -0.1, 1e-12);
  EXPECT_EQ(kind_of([&] { integrate_trajectory(p, 1.0, 0.0); }), ErrorKind::Domain);
}

TEST(RenderFrame, NoiseFreeStaticsRoundTrip) {
  const MountPose mount{3.6, -0.6, Angle::from_degrees(25.0)};
  EgoState ego;
  ego.speed = 9.0;
  ego.yaw_rate = 0.3;
  ego.heading = Angle(0.7);
  Population pop;
  pop.movers = 0;
  pop.clutter = 0;
  std::mt19937_64 rng(1);
  const auto r = render_frame(ego, 0.0, mount, pop, {0.0, 0.0, 0.0}, rng);
  const Vec2 v = solve_wlsq_motion(r.frame, WeightVector::ones(r.frame.size()));
  double vx, vy;
  oracle::radar_velocity(9.0, 0.3, 3.6, -0.6, oracle::rad(25.0), vx, vy);
  EXPECT_NEAR(v.x, vx, 1e-9);
  EXPECT_NEAR(v.y, vy, 1e-9);
  for (const auto& d : r.frame.detections) {
    ASSERT_NEAR(std::cos(d.azimuth.rad()) * vx + std::sin(d.azimuth.rad()) * vy + d.doppler, 0.0, 1e-12);
  }
}

TEST(RenderFrame, MoverMatchingEgoHasZeroDoppler) {
  const MountPose mount{3.6, -0.6, Angle::from_degrees(-85.0376)};
  EgoState ego;
  ego.speed = 12.0;
  ego.heading = Angle(1.1);
  Population pop;
  pop.statics = 0;
  pop.clutter = 0;
  pop.movers = 20;
  pop.mover_velocities = {{12.0 * std::cos(1.1), 12.0 * std::sin(1.1)}};
  std::mt19937_64 rng(2);
  const auto r = render_frame(ego, 0.0, mount, pop, {0.0, 0.0, 0.0}, rng);
  for (const auto& d : r.frame.detections) ASSERT_NEAR(d.doppler, 0.0, 1e-12);
}

TEST(RenderFrame, RansacRecoversStaticsUnderHeavyContamination) {
  const MountPose mount{3.6, -0.6, Angle::from_degrees(25.0)};
  Population pop;
  pop.statics = 30;
  pop.movers = 12;
  pop.clutter = 18;
  NoiseModel noise{oracle::rad(0.3), 0.05, 0.0};
  long statics = 0, kept = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    EgoState ego;
    ego.speed = 5.0 + 0.1 * seed;
    ego.yaw_rate = 0.004 * (seed - 50);
    const auto r = render_frame(ego, 0.0, mount, pop, noise, rng);
    const auto w = ransac_weights(r.frame, RansacConfig{0.2, 100, 5, static_cast<std::uint64_t>(seed)});
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (r.labels[j] != DetectionLabel::Static) continue;
      ++statics;
      kept += w[j] >= 0.5;
    }
  }
  EXPECT_GE(static_cast<double>(kept) / statics, 0.90);
}

TEST(GenerateScenario, Deterministic) {
  ScenarioConfig c;
  c.seed = 42;
  const auto a = generate_scenario(c);
  const auto b = generate_scenario(c);
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    ASSERT_EQ(a.frames[k].t, b.frames[k].t);
    ASSERT_EQ(a.frames[k].size(), b.frames[k].size());
    for (std::size_t j = 0; j < a.frames[k].size(); ++j) {
      ASSERT_EQ(a.frames[k].detections[j].azimuth.rad(), b.frames[k].detections[j].azimuth.rad());
      ASSERT_EQ(a.frames[k].detections[j].doppler, b.frames[k].detections[j].doppler);
      ASSERT_EQ(a.frames[k].detections[j].range, b.frames[k].detections[j].range);
    }
    ASSERT_EQ(a.labels[k], b.labels[k]);
  }
  ASSERT_EQ(a.imu.size(), b.imu.size());
  for (std::size_t i = 0; i < a.imu.size(); ++i) ASSERT_EQ(a.imu[i].yaw_rate, b.imu[i].yaw_rate);

  c.seed = 43;
  const auto d = generate_scenario(c);
  EXPECT_NE(a.frames[10].detections[0].doppler, d.frames[10].detections[0].doppler);
}

TEST(GenerateScenario, StationaryImuMeanIsBias) {
  ScenarioConfig c;
  c.imu_model = {1.0, 0.01, 0.0};
  const auto sc = generate_scenario(c);
  const auto still = samples_in(sc.imu, sc.stationary_windows());
  ASSERT_GT(still.size(), 100u);
  double sum = 0.0;
  for (const auto& s : still) sum += s.yaw_rate;
  EXPECT_DOUBLE_EQ(sum / static_cast<double>(still.size()), 0.01);
}

TEST(GenerateScenario, FrameCountAndTimestamps) {
  ScenarioConfig c;
  const auto sc = generate_scenario(c);
  EXPECT_NEAR(static_cast<double>(sc.frames.size()), 425.0, 2.0);
  for (std::size_t k = 0; k < sc.frames.size(); ++k) {
    ASSERT_GE(sc.frames[k].t, 0.0);
    ASSERT_LE(sc.frames[k].t, c.duration);
    if (k > 0) {
      ASSERT_GT(sc.frames[k].t, sc.frames[k - 1].t);
    }
    ASSERT_EQ(sc.labels[k].size(), sc.frames[k].size());
    // snapped to the IMU grid
    ASSERT_EQ(sc.imu[sc.frame_ego[k]].t, sc.frames[k].t);
  }
  for (const auto& s : sc.imu) {
    ASSERT_GE(s.t, 0.0);
    ASSERT_LE(s.t, c.duration + 1e-9);
  }
}

TEST(GenerateScenario, LabelConservation) {
  ScenarioConfig c;
  c.static_density = 36;
  c.mover_count = 12;
  c.clutter_ratio = 0.2;
  const auto sc = generate_scenario(c);
  for (const auto& labels : sc.labels) {
    int s = 0, m = 0, k = 0;
    for (auto l : labels) {
      s += l == DetectionLabel::Static;
      m += l == DetectionLabel::Mover;
      k += l == DetectionLabel::Clutter;
    }
    ASSERT_EQ(s, 36);
    ASSERT_EQ(m, 12);
    ASSERT_EQ(k, 12);  // 0.2 of 60
  }
}

TEST(GenerateScenario, InvalidConfigListsEveryField) {
  ScenarioConfig c;
  c.duration = 0.0;
  c.clutter_ratio = 1.5;
  c.frame_rate = -1.0;
  try {
    generate_scenario(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("duration"), std::string::npos);
    EXPECT_NE(msg.find("clutter_ratio"), std::string::npos);
    EXPECT_NE(msg.find("frame_rate"), std::string::npos);
  }
  EXPECT_EQ(validate(ScenarioConfig{}).size(), 0u);
}

TEST(GenerateScenario, NoiseFreeDopplerAndLateralIdentity) {
  ScenarioConfig c = clean_config(24.981);
  c.mover_count = 10;
  c.clutter_ratio = 0.1;
  c.imu_model = {1.0, 0.0, 0.0};
  const auto sc = generate_scenario(c);
  const double th = c.mount.theta.rad();
  for (std::size_t k = 0; k < sc.frames.size(); ++k) {
    const EgoState& e = sc.ego[sc.frame_ego[k]];
    double vx, vy;
    oracle::radar_velocity(e.speed, e.yaw_rate, c.mount.x_s, c.mount.y_s, th, vx, vy);
    std::vector<double> w;
    for (std::size_t j = 0; j < sc.frames[k].size(); ++j) {
      const auto& d = sc.frames[k].detections[j];
      const bool stat = sc.labels[k][j] == DetectionLabel::Static;
      w.push_back(stat ? 1.0 : 0.0);
      if (stat) {
        ASSERT_NEAR(std::cos(d.azimuth.rad()) * vx + std::sin(d.azimuth.rad()) * vy + d.doppler, 0.0, 1e-12);
      }
    }
    if (e.speed < 0.5) continue;
    const Vec2 v = solve_wlsq_motion(sc.frames[k], WeightVector(w));
    const double beta = std::atan2(v.y, v.x);
    ASSERT_NEAR(v.norm() * std::sin(beta + th) - e.yaw_rate * c.mount.x_s, 0.0, 1e-9) << k;
  }
}

TEST(GenerateScenario, RoundTripEveryEstimator) {
  for (double theta : {-85.0376, 24.981}) {
    const auto sol = solve_all(generate_scenario(clean_config(theta)));
    for (const auto& [name, s] : sol) {
      EXPECT_NEAR(s.solution.theta.deg(), theta, 1e-6) << name;
      EXPECT_NEAR(s.solution.s_prime, 1.0, 1e-6) << name;
    }
  }
}

TEST(GenerateScenario, EndToEndWithScaleAndNoise) {
  ScenarioConfig c;
  c.imu_model = {1.02, 0.01, 0.002};
  const auto sc = generate_scenario(c);
  EstimateConfig e;
  e.ransac.seed = c.seed;
  const auto sol = solve_estimators(process_frames(sc.frames, sc.imu, e), e);
  EXPECT_NEAR(sol.at("wlsq").solution.theta.deg(), 25.0, 0.05);
  EXPECT_NEAR(sol.at("wlsq").solution.s_prime, 1.0 / 1.02, 0.005);
}
