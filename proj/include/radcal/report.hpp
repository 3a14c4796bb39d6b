#pragma once

// ResultsReport and its JSON form. Optional sections are omitted from the
// document when absent (never written as null).

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radcal/config.hpp"
#include "radcal/io.hpp"
#include "radcal/pipeline.hpp"

namespace radcal {

struct SummaryStats {
  int n = 0;
  double mean_error_deg = 0.0;
  double mae_deg = 0.0;
  double variance_deg2 = 0.0;

  bool operator==(const SummaryStats&) const = default;
};

/// Mean, mean-absolute and sample variance of angle errors in degrees.
inline SummaryStats summarize(const std::vector<double>& errors_deg) {
  SummaryStats s;
  s.n = static_cast<int>(errors_deg.size());
  if (s.n == 0) return s;
  for (double e : errors_deg) {
    s.mean_error_deg += e;
    s.mae_deg += std::abs(e);
  }
  s.mean_error_deg /= s.n;
  s.mae_deg /= s.n;
  if (s.n > 1) {
    for (double e : errors_deg) s.variance_deg2 += (e - s.mean_error_deg) * (e - s.mean_error_deg);
    s.variance_deg2 /= (s.n - 1);
  }
  return s;
}

struct SceneRow {
  std::uint64_t seed = 0;
  double noise_level = 0.0;
  double mover_fraction = 0.0;
  std::string estimator;
  double theta_deg = 0.0;
  double s_prime = 1.0;
  double error_deg = 0.0;
  bool fallback = false;

  bool operator==(const SceneRow&) const = default;
};

struct IntervalRow {
  std::string estimator;
  double noise_level = 0.0;
  double mover_fraction = 0.0;
  double interval_s = 0.0;
  SummaryStats stats;

  bool operator==(const IntervalRow&) const = default;
};

struct GroupSummary {
  std::string estimator;
  double noise_level = 0.0;
  double mover_fraction = 0.0;
  SummaryStats stats;

  bool operator==(const GroupSummary&) const = default;
};

struct RteRow {
  double bias_deg = 0.0;  // angle error used for the reconstruction
  double rte_m = 0.0;
  int segments = 0;
  std::string label;  // estimator name, empty for the bias sweep

  bool operator==(const RteRow&) const = default;
};

struct Truth {
  double theta_deg = 0.0;
  double s_prime = 1.0;

  bool operator==(const Truth&) const = default;
};

struct ResultsReport {
  std::string version = kToolkitVersion;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  SolutionSet solutions;
  std::optional<Truth> truth;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::vector<SceneRow> scenes;
  std::vector<GroupSummary> summary;
  std::vector<IntervalRow> intervals;
  std::optional<std::vector<RteRow>> rte;
  std::vector<std::string> failed_cells;
};

inline nlohmann::json to_json(const SummaryStats& s) {
  return {{"n", s.n}, {"mean_error_deg", s.mean_error_deg}, {"mae_deg", s.mae_deg},
          {"variance_deg2", s.variance_deg2}};
}

inline SummaryStats summary_from_json(const nlohmann::json& j) {
  return {j.at("n").get<int>(), j.at("mean_error_deg").get<double>(), j.at("mae_deg").get<double>(),
          j.at("variance_deg2").get<double>()};
}

inline nlohmann::json to_json(const EstimatorSolution& s) {
  nlohmann::json j = {
      {"ok", s.ok},
      {"fallback", s.fallback},
      {"theta_deg", s.solution.theta.deg()},
      {"theta_rad", s.solution.theta.rad()},
      {"s_prime", s.solution.s_prime},
      {"scale", s.solution.s_prime != 0.0 ? 1.0 / s.solution.s_prime : 0.0},
      {"frames_used", s.solution.frames_used},
      {"residual_norm", s.solution.residual_norm},
      {"converged", s.solution.converged},
      {"iterations", s.solution.iterations},
  };
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

inline EstimatorSolution solution_from_json(const nlohmann::json& j) {
  EstimatorSolution s;
  s.ok = j.at("ok").get<bool>();
  s.fallback = j.at("fallback").get<bool>();
  s.solution.theta = Angle(j.at("theta_rad").get<double>());
  s.solution.s_prime = j.at("s_prime").get<double>();
  s.solution.frames_used = j.at("frames_used").get<int>();
  s.solution.residual_norm = j.at("residual_norm").get<double>();
  s.solution.converged = j.at("converged").get<bool>();
  s.solution.iterations = j.at("iterations").get<int>();
  if (j.contains("note")) s.note = j.at("note").get<std::string>();
  return s;
}

inline nlohmann::json to_json(const ResultsReport& r) {
  nlohmann::json j = {
      {"version", r.version},
      {"seed", r.seed},
      {"config", r.config},
      {"diagnostics", r.diagnostics},
  };
  if (!r.solutions.empty()) {
    nlohmann::json sols = nlohmann::json::object();
    for (const auto& [name, s] : r.solutions) sols[name] = to_json(s);
    j["solutions"] = sols;
  }
  if (r.truth) j["truth"] = {{"theta_deg", r.truth->theta_deg}, {"s_prime", r.truth->s_prime}};
  if (!r.scenes.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : r.scenes) {
      arr.push_back({{"seed", s.seed},
                     {"noise_level", s.noise_level},
                     {"mover_fraction", s.mover_fraction},
                     {"estimator", s.estimator},
                     {"theta_deg", s.theta_deg},
                     {"s_prime", s.s_prime},
                     {"error_deg", s.error_deg},
                     {"fallback", s.fallback}});
    }
    j["scenes"] = arr;
  }
  if (!r.summary.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& g : r.summary) {
      arr.push_back({{"estimator", g.estimator},
                     {"noise_level", g.noise_level},
                     {"mover_fraction", g.mover_fraction},
                     {"stats", to_json(g.stats)}});
    }
    j["summary"] = arr;
  }
  if (!r.intervals.empty()) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : r.intervals) {
      arr.push_back({{"estimator", row.estimator},
                     {"noise_level", row.noise_level},
                     {"mover_fraction", row.mover_fraction},
                     {"interval_s", row.interval_s},
                     {"stats", to_json(row.stats)}});
    }
    j["mae_vs_interval"] = arr;
  }
  if (r.rte) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& row : *r.rte) {
      nlohmann::json e = {{"bias_deg", row.bias_deg}, {"rte_m", row.rte_m}, {"segments", row.segments}};
      if (!row.label.empty()) e["label"] = row.label;
      arr.push_back(e);
    }
    j["rte"] = arr;
  }
  if (!r.failed_cells.empty()) j["failed_cells"] = r.failed_cells;
  return j;
}

inline ResultsReport report_from_json(const nlohmann::json& j) {
  try {
    ResultsReport r;
    r.version = j.at("version").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config = j.at("config");
    r.diagnostics = j.at("diagnostics");
    if (j.contains("solutions")) {
      for (auto it = j["solutions"].begin(); it != j["solutions"].end(); ++it) {
        r.solutions[it.key()] = solution_from_json(it.value());
      }
    }
    if (j.contains("truth")) {
      r.truth = Truth{j["truth"].at("theta_deg").get<double>(), j["truth"].at("s_prime").get<double>()};
    }
    if (j.contains("scenes")) {
      for (const auto& s : j["scenes"]) {
        r.scenes.push_back({s.at("seed").get<std::uint64_t>(), s.at("noise_level").get<double>(),
                            s.at("mover_fraction").get<double>(), s.at("estimator").get<std::string>(),
                            s.at("theta_deg").get<double>(), s.at("s_prime").get<double>(),
                            s.at("error_deg").get<double>(), s.at("fallback").get<bool>()});
      }
    }
    if (j.contains("summary")) {
      for (const auto& g : j["summary"]) {
        r.summary.push_back({g.at("estimator").get<std::string>(), g.at("noise_level").get<double>(),
                             g.at("mover_fraction").get<double>(), summary_from_json(g.at("stats"))});
      }
    }
    if (j.contains("mae_vs_interval")) {
      for (const auto& row : j["mae_vs_interval"]) {
        r.intervals.push_back({row.at("estimator").get<std::string>(), row.at("noise_level").get<double>(),
                               row.at("mover_fraction").get<double>(), row.at("interval_s").get<double>(),
                               summary_from_json(row.at("stats"))});
      }
    }
    if (j.contains("rte")) {
      std::vector<RteRow> rows;
      for (const auto& row : j["rte"]) {
        rows.push_back({row.at("bias_deg").get<double>(), row.at("rte_m").get<double>(),
                        row.at("segments").get<int>(), row.value("label", std::string())});
      }
      r.rte = rows;
    }
    if (j.contains("failed_cells")) r.failed_cells = j["failed_cells"].get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("malformed report: ") + e.what());
  }
}

inline void write_report(const ResultsReport& report, const std::string& path) {
  write_json(path, to_json(report));
}

inline ResultsReport read_report(const std::string& path) { return report_from_json(read_json(path)); }

}  // namespace radcal
