// radcal: simulate | estimate | benchmark | report
//
// Exit codes: 0 success, 2 configuration error, 3 insufficient data,
// 4 I/O or input-format error, 1 anything else.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "radcal/benchmark.hpp"
#include "radcal/config.hpp"
#include "radcal/io.hpp"
#include "radcal/report.hpp"
#include "radcal/run.hpp"

namespace fs = std::filesystem;
using namespace radcal;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kInsufficient = 3, kIo = 4 };

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level() {
  const char* env = std::getenv("RADCAL_LOG");
  if (!env) return Level::Warn;
  const std::string v = env;
  if (v == "error" || v == "0") return Level::Error;
  if (v == "info" || v == "2") return Level::Info;
  if (v == "debug" || v == "3") return Level::Debug;
  return Level::Warn;
}

void log(Level lvl, const std::string& msg) {
  static const Level threshold = log_level();
  if (lvl > threshold) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "radcal [" << names[static_cast<int>(lvl)] << "] " << msg << "\n";
}

// Failures are classified by the phase they happen in: anything wrong with the
// configuration is a config error, anything wrong with an input file is an I/O
// error, and running out of usable frames is insufficient data.
struct Failure {
  int code;
  std::string message;
};

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed,
                      const std::string& estimator) {
  RunConfig run;
  try {
    if (!path.empty()) run = parse_run_config(read_json(path));
    if (seed) run.apply_seed(*seed);
    if (!estimator.empty()) run.estimate.estimators = parse_estimators(estimator);
  } catch (const Error& e) {
    throw Failure{e.kind() == ErrorKind::Io ? kIo : kConfig, e.what()};
  }
  return run;
}

template <class F>
auto reading(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Failure{kIo, e.what()};
  }
}

template <class F>
auto computing(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    switch (e.kind()) {
      case ErrorKind::InsufficientData: throw Failure{kInsufficient, e.what()};
      case ErrorKind::Io: throw Failure{kIo, e.what()};
      case ErrorKind::Alignment:
      case ErrorKind::Parse: throw Failure{kIo, e.what()};
      default: throw Failure{kOther, e.what()};
    }
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{kIo, "cannot create '" + dir.string() + "': " + ec.message()};
}

void print_summary(const ResultsReport& r, std::ostream& os) {
  os << r.version << "  seed " << r.seed << "\n";
  if (r.truth) os << "truth: theta " << r.truth->theta_deg << " deg, s' " << r.truth->s_prime << "\n";
  for (const auto& [name, s] : r.solutions) {
    os << "  " << name << ": ";
    if (!s.ok) {
      os << "failed (" << s.note << ")\n";
      continue;
    }
    os << "theta " << s.solution.theta.deg() << " deg, s' " << s.solution.s_prime << ", frames "
       << s.solution.frames_used << (s.fallback ? ", scale fallback" : "") << "\n";
  }
  for (const auto& g : r.summary) {
    os << "  " << g.estimator << " noise " << g.noise_level << " movers " << g.mover_fraction << ": n "
       << g.stats.n << ", MAE " << g.stats.mae_deg << " deg, var " << g.stats.variance_deg2 << " deg^2\n";
  }
  if (r.rte) {
    for (const auto& row : *r.rte) {
      os << "  rte" << (row.label.empty() ? "" : " " + row.label) << ": bias " << row.bias_deg << " deg -> "
         << row.rte_m << " m over " << row.segments << " segments\n";
    }
  }
  if (!r.failed_cells.empty()) os << "  failed cells: " << r.failed_cells.size() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar mounting-angle calibration toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolkitVersion));

  std::string config_path, out_dir, estimator, radar_path, imu_path, weights_path, truth_path, data_dir,
      report_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;

  auto* sim = app.add_subcommand("simulate", "Render a synthetic scene (radar.csv, imu.csv, truth.json)");
  sim->add_option("--config", config_path, "Run configuration JSON")->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--seed", seed, "Override the seed");

  auto* est = app.add_subcommand("estimate", "Estimate the mounting angle from recorded data");
  est->add_option("--config", config_path, "Run configuration JSON")->check(CLI::ExistingFile);
  est->add_option("--data", data_dir, "Directory holding radar.csv, imu.csv and optionally truth.json");
  est->add_option("--radar", radar_path, "Radar detections CSV");
  est->add_option("--imu", imu_path, "IMU yaw-rate CSV");
  est->add_option("--weights", weights_path, "Per-detection weights CSV (sets weight_source=external)");
  est->add_option("--truth", truth_path, "Ground-truth JSON from simulate");
  est->add_option("--out", out_dir, "Output directory for report.json")->required();
  est->add_option("--seed", seed, "Override the seed");
  est->add_option("--estimator", estimator, "wlsq | mean | kabsch | odr | all");

  auto* bench = app.add_subcommand("benchmark", "Monte-Carlo sweep with plot-ready tables");
  bench->add_option("--config", config_path, "Run configuration JSON")->check(CLI::ExistingFile);
  bench->add_option("--out", out_dir, "Output directory")->required();
  bench->add_option("--seed", seed, "Override the base seed");
  bench->add_option("--estimator", estimator, "wlsq | mean | kabsch | odr | all");
  bench->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("report", "Print a summary of a report JSON");
  rep->add_option("report", report_path, "report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*sim) {
      const RunConfig run = load_config(config_path, seed, "");
      const auto t0 = std::chrono::steady_clock::now();
      const Scenario sc = computing([&] { return generate_scenario(run.scenario); });
      ensure_dir(out_dir);
      computing([&] {
        write_simulation(sc, out_dir);
        return 0;
      });
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log(Level::Info, std::to_string(sc.frames.size()) + " frames, " + std::to_string(sc.imu.size()) +
                           " IMU samples in " + std::to_string(secs) + " s");
      std::cout << "wrote " << (fs::path(out_dir) / "radar.csv").string() << ", imu.csv, truth.json ("
                << sc.frames.size() << " frames)\n";
      return kOk;
    }

    if (*est) {
      RunConfig run = load_config(config_path, seed, estimator);
      if (!data_dir.empty()) {
        const fs::path d(data_dir);
        if (radar_path.empty()) radar_path = (d / "radar.csv").string();
        if (imu_path.empty()) imu_path = (d / "imu.csv").string();
        if (truth_path.empty() && fs::exists(d / "truth.json")) truth_path = (d / "truth.json").string();
      }
      if (radar_path.empty() || imu_path.empty()) {
        throw Failure{kConfig, "estimate needs --radar and --imu (or --data)"};
      }
      const auto frames = reading([&] { return read_radar_csv(radar_path); });
      const auto imu = reading([&] { return read_imu_csv(imu_path); });
      std::optional<std::vector<WeightVector>> weights;
      if (!weights_path.empty()) {
        weights = reading([&] { return read_weights_csv(weights_path, frames); });
        run.estimate.weight_source = WeightSource::External;
      } else if (run.estimate.weight_source == WeightSource::External) {
        throw Failure{kConfig, "weight_source 'external' requires --weights"};
      }
      std::optional<TruthFile> truth;
      if (!truth_path.empty()) truth = reading([&] { return read_truth(truth_path); });
      log(Level::Info, "read " + std::to_string(frames.size()) + " frames, " + std::to_string(imu.size()) +
                           " IMU samples");

      const ResultsReport report = computing(
          [&] { return estimate_report(frames, imu, run, weights ? &*weights : nullptr, truth); });
      ensure_dir(out_dir);
      const auto path = (fs::path(out_dir) / "report.json").string();
      computing([&] {
        write_report(report, path);
        return 0;
      });
      print_summary(report, std::cout);
      return kOk;
    }

    if (*bench) {
      const RunConfig run = load_config(config_path, seed, estimator);
      const auto t0 = std::chrono::steady_clock::now();
      const auto result = computing([&] { return run_benchmark(run, jobs); });
      ensure_dir(out_dir);
      computing([&] {
        write_report(result.report, (fs::path(out_dir) / "report.json").string());
        write_benchmark_tables(result.report, out_dir);
        return 0;
      });
      for (const auto& f : result.report.failed_cells) log(Level::Warn, "cell failed: " + f);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log(Level::Info, std::to_string(result.cells.size()) + " cells in " + std::to_string(secs) + " s");
      print_summary(result.report, std::cout);
      return kOk;
    }

    if (*rep) {
      const ResultsReport r = reading([&] { return read_report(report_path); });
      print_summary(r, std::cout);
      return kOk;
    }
  } catch (const Failure& f) {
    log(Level::Error, f.message);
    return f.code;
  } catch (const std::exception& e) {
    log(Level::Error, e.what());
    return kOther;
  }
  return kOther;
}
