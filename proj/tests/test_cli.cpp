#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const char* cli = std::getenv("RADCAL_CLI");
    if (!cli) GTEST_SKIP() << "RADCAL_CLI not set";
    cli_ = cli;
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("radcal_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!dir_.empty()) fs::remove_all(dir_);
  }

  int run(const std::string& args) {
    const std::string cmd = "\"" + cli_ + "\" " + args + " > \"" + (dir_ / "stdout.txt").string() +
                            "\" 2> \"" + (dir_ / "stderr.txt").string() + "\"";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string config(const std::string& name, const json& j) {
    std::ofstream(path(name)) << j.dump(2);
    return path(name);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::string out() const { return slurp(dir_ / "stdout.txt"); }
  std::string err() const { return slurp(dir_ / "stderr.txt"); }

  std::string cli_;
  fs::path dir_;
};

json noise_free(double scale = 1.0) {
  return {{"seed", 5},
          {"scenario",
           {{"mover_count", 0},
            {"clutter_ratio", 0.0},
            {"imu_model", {{"scale", scale}, {"bias", 0.01}, {"noise_std", 0.0}}},
            {"noise", {{"sigma_azimuth_deg", 0.0}, {"sigma_doppler", 0.0}, {"accel_doppler_coeff", 0.0}}}}},
          {"rte", {{"enabled", false}}}};
}

}  // namespace

TEST_F(CliTest, SimulateIsDeterministic) {
  ASSERT_EQ(run("simulate --out " + path("a")), 0) << err();
  ASSERT_EQ(run("simulate --out " + path("b")), 0) << err();
  for (const char* f : {"radar.csv", "imu.csv", "truth.json"}) {
    const auto a = slurp(dir_ / "a" / f);
    EXPECT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir_ / "b" / f)) << f;
  }
  ASSERT_EQ(run("simulate --seed 43 --out " + path("c")), 0);
  EXPECT_NE(slurp(dir_ / "a" / "radar.csv"), slurp(dir_ / "c" / "radar.csv"));
}

TEST_F(CliTest, SimulateFrameCount) {
  ASSERT_EQ(run("simulate --out " + path("sim")), 0) << err();
  // 25 s at 17 Hz, both ends included
  EXPECT_NE(out().find("(426 frames)"), std::string::npos) << out();
}

TEST_F(CliTest, EstimateAllAgreeNoiseFree) {
  const auto cfg = config("cfg.json", noise_free());
  ASSERT_EQ(run("simulate --config " + cfg + " --out " + path("sim")), 0) << err();
  ASSERT_EQ(run("estimate --config " + cfg + " --data " + path("sim") + " --estimator all --out " + path("est")), 0)
      << err();
  const json rep = json::parse(slurp(dir_ / "est" / "report.json"));
  ASSERT_EQ(rep["solutions"].size(), 4u);
  const double ref = rep["solutions"]["wlsq"]["theta_deg"].get<double>();
  for (const auto& [name, s] : rep["solutions"].items()) {
    EXPECT_NEAR(s["theta_deg"].get<double>(), ref, 1e-6) << name;
  }
  EXPECT_NEAR(ref, 25.0, 1e-5);
}

TEST_F(CliTest, EstimateRecoversScaledImu) {
  // default scene and noise, only the IMU scale changed
  const auto cfg = config("cfg.json", {{"scenario", {{"imu_model", {{"scale", 1.02}}}}}});
  ASSERT_EQ(run("simulate --config " + cfg + " --out " + path("sim")), 0) << err();
  ASSERT_EQ(run("estimate --config " + cfg + " --data " + path("sim") + " --out " + path("est")), 0) << err();
  const json rep = json::parse(slurp(dir_ / "est" / "report.json"));
  const auto& s = rep["solutions"]["wlsq"];
  EXPECT_NEAR(s["theta_deg"].get<double>(), 25.0, 0.05);
  EXPECT_NEAR(s["scale"].get<double>(), 1.02, 0.005);
  EXPECT_NE(out().find("wlsq: theta"), std::string::npos);
}

TEST_F(CliTest, ReportSubcommandSummarises) {
  ASSERT_EQ(run("simulate --out " + path("sim")), 0) << err();
  ASSERT_EQ(run("estimate --data " + path("sim") + " --out " + path("est")), 0) << err();
  const std::string first = out();
  ASSERT_EQ(run("report " + path("est/report.json")), 0) << err();
  EXPECT_EQ(out(), first);
  EXPECT_NE(out().find("truth: theta 25"), std::string::npos) << out();
}

TEST_F(CliTest, EstimateIsReproducible) {
  ASSERT_EQ(run("simulate --out " + path("sim")), 0);
  ASSERT_EQ(run("estimate --data " + path("sim") + " --out " + path("e1")), 0);
  ASSERT_EQ(run("estimate --data " + path("sim") + " --out " + path("e2")), 0);
  EXPECT_EQ(slurp(dir_ / "e1" / "report.json"), slurp(dir_ / "e2" / "report.json"));
}

TEST_F(CliTest, ConfigErrorExitsTwo) {
  const auto cfg = config("bad.json", {{"scenario", {{"duration_s", 0.0}, {"frame_rate_hz", -1.0}}}});
  EXPECT_EQ(run("simulate --config " + cfg + " --out " + path("sim")), 2);
  EXPECT_NE(err().find("duration"), std::string::npos) << err();
  EXPECT_NE(err().find("frame_rate"), std::string::npos) << err();
  EXPECT_EQ(run("estimate --estimator bogus --radar x --imu y --out " + path("e")), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("benchmark --jobs 0 --out " + path("b")), 2);
}

TEST_F(CliTest, StationarySceneExitsThree) {
  json j = noise_free();
  j["scenario"]["segments"] = json::array({{{"duration_s", 8.0},
                                            {"speed_start", 0.0},
                                            {"speed_end", 0.0},
                                            {"yaw_rate_start", 0.0},
                                            {"yaw_rate_end", 0.0}}});
  const auto cfg = config("still.json", j);
  ASSERT_EQ(run("simulate --config " + cfg + " --out " + path("sim")), 0) << err();
  EXPECT_EQ(run("estimate --config " + cfg + " --data " + path("sim") + " --out " + path("est")), 3) << err();
  EXPECT_FALSE(fs::exists(dir_ / "est" / "report.json"));
}

TEST_F(CliTest, InputErrorsExitFour) {
  EXPECT_EQ(run("estimate --radar " + path("none.csv") + " --imu " + path("none2.csv") + " --out " + path("e")), 4);
  EXPECT_NE(err().find("none.csv"), std::string::npos) << err();

  ASSERT_EQ(run("simulate --out " + path("sim")), 0);
  std::ofstream(path("broken.csv")) << "# radcal-v1\nt_s,azimuth_rad,doppler_mps,range_m,amplitude\n0.0,abc,1.0,5.0,1.0\n";
  EXPECT_EQ(run("estimate --radar " + path("broken.csv") + " --imu " + path("sim/imu.csv") + " --out " + path("e")),
            4);
  std::ofstream(path("junk.json")) << "{ not json";
  EXPECT_EQ(run("report " + path("junk.json")), 4);
  EXPECT_EQ(run("report " + path("missing.json")), 4);
}

TEST_F(CliTest, BenchmarkWritesTablesInParallel) {
  const auto cfg = config("bench.json", {{"seed", 3},
                                         {"benchmark",
                                          {{"seeds", 2},
                                           {"noise_levels", {0.0, 1.0}},
                                           {"mover_fractions", {0.0, 0.2}},
                                           {"intervals_s", {2.0, 4.0}},
                                           {"scene_duration_s", 4.0},
                                           {"rte_bias_deg", {0.0, 0.05}},
                                           {"rte_route_length_m", 300.0}}}});
  ASSERT_EQ(run("benchmark --config " + cfg + " --jobs 3 --out " + path("b3")), 0) << err();
  ASSERT_EQ(run("benchmark --config " + cfg + " --out " + path("b1")), 0) << err();
  for (const char* f : {"report.json", "mae_vs_interval.csv", "variance_vs_interval.csv", "theta_per_scene.csv",
                        "outlier_sweep.csv", "rte_vs_bias.csv"}) {
    const auto a = slurp(dir_ / "b3" / f);
    ASSERT_FALSE(a.empty()) << f;
    EXPECT_EQ(a, slurp(dir_ / "b1" / f)) << f;
    if (std::string(f).ends_with(".csv")) {
      EXPECT_EQ(a.rfind("# radcal-v1", 0), 0u) << f;
    }
  }
}

TEST_F(CliTest, VersionFlag) {
  EXPECT_EQ(run("--version"), 0);
  EXPECT_FALSE(out().empty());
}
