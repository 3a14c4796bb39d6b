#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "radcal/motion.hpp"
#include "radcal/sim.hpp"

using namespace radcal;

namespace {

using support::kind_of;

RadarFrame noisy_static_frame(Vec2 v, int n, double sigma, std::mt19937_64& rng, double half = 1.3) {
  std::uniform_real_distribution<double> az(-half, half);
  std::normal_distribution<double> g(0.0, sigma);
  RadarFrame f;
  for (int i = 0; i < n; ++i) {
    const double a = az(rng);
    f.detections.push_back({Angle(a), oracle::doppler(v.x, v.y, a) + g(rng), 10.0, 1.0});
  }
  return f;
}

}  // namespace

TEST(PredictedDoppler, HeadOnBroadsideDiagonal) {
  EXPECT_EQ(predicted_doppler({10.0, 0.0}, Angle(0.0)), -10.0);
  EXPECT_NEAR(predicted_doppler({10.0, 0.0}, Angle(kPi / 2.0)), 0.0, 1e-14);
  EXPECT_NEAR(predicted_doppler({10.0, 0.0}, Angle(kPi / 4.0)), -7.0711, 5e-5);
  EXPECT_NEAR(predicted_doppler({10.0, 0.0}, Angle(kPi / 4.0)), -10.0 * std::cos(oracle::pi / 4.0), 1e-14);
}

TEST(SolveWlsqMotion, ThreeStaticPoints) {
  RadarFrame f;
  f.detections = {{Angle(0.0), -10.0, 5.0, 1.0},
                  {Angle(kPi / 4.0), -10.0 * std::cos(kPi / 4.0), 5.0, 1.0},
                  {Angle(-kPi / 4.0), -10.0 * std::cos(kPi / 4.0), 5.0, 1.0}};
  const Vec2 v = solve_wlsq_motion(f, WeightVector::ones(3));
  EXPECT_NEAR(v.x, 10.0, 1e-12);
  EXPECT_NEAR(v.y, 0.0, 1e-12);

  f.detections.push_back({Angle(0.0), 5.0, 5.0, 1.0});
  const Vec2 w = solve_wlsq_motion(f, WeightVector({1.0, 1.0, 1.0, 0.0}));
  EXPECT_NEAR(w.x, 10.0, 1e-12);
  EXPECT_NEAR(w.y, 0.0, 1e-12);
}

TEST(SolveWlsqMotion, NoisyRecoveryProbability) {
  int good = 0;
  for (int seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed);
    const RadarFrame f = noisy_static_frame({8.0, 1.5}, 50, 0.1, rng);
    const Vec2 v = solve_wlsq_motion(f, WeightVector::ones(f.size()));
    good += (v - Vec2{8.0, 1.5}).norm() < 0.1;
  }
  EXPECT_GT(good, 990);
}

TEST(SolveWlsqMotion, Errors) {
  RadarFrame same;
  same.detections = {{Angle(0.3), -1.0, 1, 1}, {Angle(0.3), -1.0, 1, 1}, {Angle(0.3), -1.0, 1, 1}};
  EXPECT_EQ(kind_of([&] { solve_wlsq_motion(same, WeightVector::ones(3)); }), ErrorKind::SingularGeometry);
  const RadarFrame two = oracle::static_frame(1, 0, {0.1, 0.5});
  EXPECT_EQ(kind_of([&] { solve_wlsq_motion(two, WeightVector({1.0, 0.0})); }), ErrorKind::InsufficientData);
  EXPECT_EQ(kind_of([&] { solve_wlsq_motion(two, WeightVector::ones(3)); }), ErrorKind::Alignment);
}

TEST(SolveWlsqMotion, NoiseFreeExactnessProperty) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> vel(-30.0, 30.0), az(-1.5, 1.5);
  std::uniform_int_distribution<int> count(2, 40);
  for (int i = 0; i < 2000; ++i) {
    const Vec2 v{vel(rng), vel(rng)};
    std::vector<double> azs;
    const int n = count(rng);
    for (int k = 0; k < n; ++k) azs.push_back(az(rng));
    if (std::abs(std::sin(azs[0] - azs[1])) < 1e-3) continue;
    const Vec2 est = solve_wlsq_motion(oracle::static_frame(v.x, v.y, azs), WeightVector::ones(azs.size()));
    ASSERT_NEAR(est.x, v.x, 1e-9);
    ASSERT_NEAR(est.y, v.y, 1e-9);
  }
}

TEST(SolveWlsqMotion, WeightScalingInvariance) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> w(0.05, 1.0), c(0.01, 1.0);
  for (int i = 0; i < 500; ++i) {
    const RadarFrame f = noisy_static_frame({7.0, -2.0}, 30, 0.3, rng);
    std::vector<double> base(f.size());
    for (double& x : base) x = w(rng);
    const double k = c(rng);
    std::vector<double> scaled = base;
    for (double& x : scaled) x *= k;
    const Vec2 a = solve_wlsq_motion(f, WeightVector(base));
    const Vec2 b = solve_wlsq_motion(f, WeightVector(scaled));
    ASSERT_NEAR(a.x, b.x, 1e-12);
    ASSERT_NEAR(a.y, b.y, 1e-12);
  }
}

TEST(WeightVector, RejectsOutOfRange) {
  EXPECT_EQ(kind_of([] { WeightVector({0.5, 1.2}); }), ErrorKind::Validation);
  EXPECT_EQ(kind_of([] { WeightVector({-0.1}); }), ErrorKind::Validation);
}

TEST(CountInliers, Examples) {
  EXPECT_EQ(count_inliers(WeightVector({1, 1, 0, 1}), 0.5), 3);
  EXPECT_EQ(count_inliers(WeightVector({0.6, 0.4, 0.5}), 0.5), 2);
  EXPECT_EQ(count_inliers(WeightVector(), 0.5), 0);
  EXPECT_EQ(kind_of([] { count_inliers(WeightVector({1.0}), 0.0); }), ErrorKind::Domain);
}

TEST(CountInliers, MonotoneInThreshold) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> w(25);
    for (double& x : w) x = u(rng);
    const WeightVector wv(w);
    int prev = count_inliers(wv, 1e-6);
    for (double it = 0.01; it <= 1.0; it += 0.01) {
      const int c = count_inliers(wv, it);
      ASSERT_LE(c, prev);
      prev = c;
    }
  }
}

TEST(Residuals, Examples) {
  const RadarFrame exact = oracle::static_frame(4.0, 1.0, {-0.5, 0.0, 0.7});
  for (double e : residuals(exact, {4.0, 1.0}, {true, true, true})) EXPECT_NEAR(e, 0.0, 1e-14);

  RadarFrame one;
  one.detections = {{Angle(0.0), -9.0, 1, 1}};
  const auto eps = residuals(one, {10.0, 0.0}, {true});
  ASSERT_EQ(eps.size(), 1u);
  EXPECT_NEAR(eps[0], 1.0, 1e-14);

  // eps = A v - D with v = 0 is -D = d
  RadarFrame still;
  still.detections = {{Angle(0.2), -3.0, 1, 1}, {Angle(-0.4), -3.0, 1, 1}};
  for (double e : residuals(still, {0.0, 0.0}, {true, true})) EXPECT_EQ(e, -3.0);

  EXPECT_EQ(kind_of([&] { residuals(still, {0, 0}, {false, false}); }), ErrorKind::InsufficientData);
}

TEST(Residuals, IdentityWithDesignRows) {
  std::mt19937_64 rng(15);
  const RadarFrame f = noisy_static_frame({5.0, 2.0}, 20, 0.5, rng);
  std::vector<bool> mask(f.size());
  for (std::size_t j = 0; j < mask.size(); ++j) mask[j] = j % 3 != 0;
  const Vec2 v{4.2, 1.7};
  const auto eps = residuals(f, v, mask);
  const auto rows = design_rows(f, mask);
  std::size_t i = 0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (!mask[j]) continue;
    ASSERT_NEAR(eps[i], rows[i].x * v.x + rows[i].y * v.y + f.detections[j].doppler, 1e-14);
    ++i;
  }
}

TEST(MotionCovariance, ZeroResidualsGiveZeroMatrix) {
  const std::vector<double> eps{0.0, 0.0, 0.0, 0.0};
  const std::vector<Vec2> rows{{1, 0}, {0, 1}, {0.6, 0.8}, {0.8, -0.6}};
  const auto c = motion_covariance(eps, rows, 4, 4, 0.3);
  ASSERT_FALSE(c.is_infinite());
  EXPECT_EQ(c.matrix(), Eigen::Matrix2d::Zero());
}

TEST(MotionCovariance, SparseBranches) {
  const std::vector<double> eps{0.1, -0.1};
  const std::vector<Vec2> rows{{1, 0}, {0, 1}};
  EXPECT_TRUE(motion_covariance(eps, rows, 2, 10, 0.3).is_infinite());  // L/J = 0.2
  EXPECT_TRUE(motion_covariance(eps, rows, 2, 2, 0.3).is_infinite());   // L <= 2
  EXPECT_TRUE(std::isinf(MotionCovariance::infinite().trace()));
}

TEST(MotionCovariance, MatchesFormula) {
  const std::vector<double> eps{0.1, -0.2, 0.05, 0.3};
  const std::vector<Vec2> rows{{1, 0}, {0, 1}, {0.6, 0.8}, {0.8, -0.6}};
  Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
  for (auto r : rows) ata += Eigen::Vector2d(r.x, r.y) * Eigen::Vector2d(r.x, r.y).transpose();
  const double s2 = (0.01 + 0.04 + 0.0025 + 0.09) / 2.0;
  const Eigen::Matrix2d expect = s2 * ata.inverse();
  const auto c = motion_covariance(eps, rows, 4, 5, 0.3);
  EXPECT_TRUE(c.matrix().isApprox(expect, 1e-12));
}

TEST(MotionCovariance, PsdProperty) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 300; ++i) {
    const RadarFrame f = noisy_static_frame({9.0, -1.0}, 40, 0.2, rng);
    const auto est = estimate_motion(f, WeightVector::ones(f.size()), MotionConfig{});
    ASSERT_FALSE(est.sparse);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(est.covariance.matrix());
    ASSERT_GE(es.eigenvalues().minCoeff(), -1e-15);
    ASSERT_EQ(est.covariance.matrix()(0, 1), est.covariance.matrix()(1, 0));
  }
}

TEST(MotionCovariance, MonteCarloFidelity) {
  // fixed azimuths, fresh noise per seed
  std::mt19937_64 geo(99);
  std::uniform_real_distribution<double> az(-1.3, 1.3);
  std::vector<double> azs(200);
  for (double& a : azs) a = az(geo);
  const Vec2 v{10.0, -2.0};
  std::vector<Vec2> est;
  Eigen::Matrix2d mean_cov = Eigen::Matrix2d::Zero();
  for (int seed = 0; seed < 1000; ++seed) {
    std::mt19937_64 rng(seed + 1000);
    std::normal_distribution<double> g(0.0, 0.1);
    RadarFrame f = oracle::static_frame(v.x, v.y, azs);
    for (auto& d : f.detections) d.doppler += g(rng);
    const auto m = estimate_motion(f, WeightVector::ones(f.size()), MotionConfig{});
    est.push_back(m.v);
    mean_cov += m.covariance.matrix() / 1000.0;
  }
  double mx = 0, my = 0;
  for (auto& e : est) {
    mx += e.x / est.size();
    my += e.y / est.size();
  }
  double vx = 0, vy = 0;
  for (auto& e : est) {
    vx += (e.x - mx) * (e.x - mx) / (est.size() - 1);
    vy += (e.y - my) * (e.y - my) / (est.size() - 1);
  }
  EXPECT_LT(std::max(mean_cov(0, 0) / vx, vx / mean_cov(0, 0)), 1.5);
  EXPECT_LT(std::max(mean_cov(1, 1) / vy, vy / mean_cov(1, 1)), 1.5);
}

TEST(GateFrame, Examples) {
  EXPECT_FALSE(gate_frame(0.5, 0.0));
  EXPECT_FALSE(gate_frame(10.0, deg2rad(150.0)));
  EXPECT_FALSE(gate_frame(10.0, -deg2rad(150.0)));
  EXPECT_TRUE(gate_frame(10.0, 0.1));
  EXPECT_TRUE(gate_frame(1.0, 0.0));
}

TEST(Ransac, TwoPointsBothInliers) {
  const RadarFrame f = oracle::static_frame(5.0, 0.0, {0.2, -0.4});
  const auto w = ransac_weights(f, RansacConfig{});
  EXPECT_EQ(w, WeightVector::ones(2));
}

TEST(Ransac, FewerThanTwoIsError) {
  const RadarFrame f = oracle::static_frame(5.0, 0.0, {0.2});
  EXPECT_EQ(kind_of([&] { ransac_weights(f, RansacConfig{}); }), ErrorKind::InsufficientData);
}

TEST(Ransac, Deterministic) {
  std::mt19937_64 rng(2);
  const RadarFrame f = noisy_static_frame({6.0, 1.0}, 60, 0.3, rng);
  RansacConfig cfg;
  cfg.seed = 1234;
  EXPECT_EQ(ransac_weights(f, cfg), ransac_weights(f, cfg));
}

TEST(Ransac, NoConsensusGivesZeros) {
  // every point on its own velocity: no pair explains 5 points
  RadarFrame f;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dop(-50.0, 50.0);
  for (int i = 0; i < 6; ++i) f.detections.push_back({Angle(-1.0 + 0.4 * i), dop(rng), 1, 1});
  RansacConfig cfg;
  cfg.doppler_threshold = 1e-6;
  cfg.min_inliers = 5;
  EXPECT_EQ(ransac_weights(f, cfg), WeightVector::zeros(6));
}

TEST(Ransac, SelectsStaticSetWithMovers) {
  double recovered = 0.0;
  int total = 0;
  for (int seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(seed);
    Population pop;
    pop.statics = 48;
    pop.movers = 12;
    pop.mover_groups = 3;
    pop.clutter = 0;
    EgoState ego;
    ego.speed = 10.0;
    NoiseModel noise{deg2rad(0.1), 0.05, 0.0};
    const auto r = render_frame(ego, 0.0, MountPose{3.6, -0.6, Angle::from_degrees(25.0)}, pop, noise, rng);
    RansacConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(seed);
    const auto w = ransac_weights(r.frame, cfg);
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (r.labels[j] != DetectionLabel::Static) continue;
      ++total;
      recovered += w[j];
    }
  }
  EXPECT_GE(recovered / total, 0.95);
}

TEST(Ransac, DominantMoverGroupStaysConsistent) {
  // 70% of the frame is one rigid mover; whichever set wins must fit itself
  std::mt19937_64 rng(17);
  Population pop;
  pop.statics = 12;
  pop.movers = 28;
  pop.mover_groups = 1;
  pop.mover_velocities = {{6.0, 3.0}};
  pop.clutter = 0;
  EgoState ego;
  ego.speed = 10.0;
  const auto r = render_frame(ego, 0.0, MountPose{}, pop, NoiseModel{0.0, 0.02, 0.0}, rng);
  RansacConfig cfg;
  const auto w = ransac_weights(r.frame, cfg);
  const Vec2 fit = solve_wlsq_motion(r.frame, w);
  std::vector<bool> mask(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) mask[j] = w[j] > 0.5;
  for (double e : residuals(r.frame, fit, mask)) EXPECT_LE(std::abs(e), cfg.doppler_threshold);
}

TEST(EstimateMotion, SparseWhenInlierRatioLow) {
  const RadarFrame f = oracle::static_frame(5.0, 1.0, oracle::spread(10, 1.2));
  std::vector<double> w(10, 0.0);
  w[0] = w[4] = 1.0;  // L/J = 0.2 < IRT
  const auto est = estimate_motion(f, WeightVector(w), MotionConfig{});
  EXPECT_TRUE(est.sparse);
  EXPECT_TRUE(est.covariance.is_infinite());
  EXPECT_EQ(est.inlier_count, 2);
}

TEST(EstimateMotion, DenseNoiseFreeFrame) {
  const RadarFrame f = oracle::static_frame(5.0, 1.0, oracle::spread(10, 1.2), 3.5);
  const auto est = estimate_motion(f, WeightVector::ones(10), MotionConfig{});
  EXPECT_FALSE(est.sparse);
  EXPECT_EQ(est.t, 3.5);
  EXPECT_NEAR(est.v.x, 5.0, 1e-12);
  EXPECT_NEAR(est.v.y, 1.0, 1e-12);
  EXPECT_NEAR(est.beta.rad(), std::atan2(1.0, 5.0), 1e-12);
  EXPECT_NEAR(est.covariance.trace(), 0.0, 1e-20);
}

TEST(EstimateMotion, UnsolvableFrameIsSparse) {
  const RadarFrame f = oracle::static_frame(5.0, 1.0, {0.3, 0.3, 0.3});
  const auto est = estimate_motion(f, WeightVector::ones(3), MotionConfig{});
  EXPECT_TRUE(est.sparse);
}

TEST(FrameSeed, DistinctAndStable) {
  EXPECT_EQ(frame_seed(42, 3), frame_seed(42, 3));
  EXPECT_NE(frame_seed(42, 3), frame_seed(42, 4));
  EXPECT_NE(frame_seed(42, 3), frame_seed(43, 3));
}
