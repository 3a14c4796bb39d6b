#pragma once

// File formats.
//
//   radar CSV    # radcal-v1
//                t_s,azimuth_rad,doppler_mps,range_m,amplitude
//   IMU CSV      # radcal-v1
//                t_s,yaw_rate_radps
//   weights CSV  # radcal-v1
//                t_s,weight          (one row per radar detection, same order)
//   trajectory   # radcal-v1
//                t_s,x_m,y_m,heading_rad
//
// Writers emit the version comment and full round-trip precision. Readers
// accept files with or without the version comment, reject any other
// version, and reject rather than repair malformed rows.

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "radcal/error.hpp"
#include "radcal/imu.hpp"
#include "radcal/motion.hpp"
#include "radcal/sim.hpp"
#include "radcal/traj.hpp"

namespace radcal {

inline constexpr const char* kFormatTag = "# radcal-v1";

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string context(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

inline double parse_double(const std::string& field, const std::string& path, std::size_t line) {
  double v = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw Error(ErrorKind::Parse, context(path, line) + ": invalid number '" + field + "'");
  }
  return v;
}

/// Reads a CSV table with the given header; returns numeric rows and the
/// file line number of each row.
struct Table {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;
};

inline Table read_table(const std::string& path, const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty()) continue;
    if (s[0] == '#') {
      if (s.rfind("# radcal-v", 0) == 0 && s != kFormatTag) {
        throw Error(ErrorKind::Parse, context(path, lineno) + ": unsupported format version '" + s + "'");
      }
      continue;
    }
    const auto fields = split_csv(s);
    if (!have_header) {
      if (fields != header) {
        std::string want;
        for (std::size_t i = 0; i < header.size(); ++i) want += (i ? "," : "") + header[i];
        throw Error(ErrorKind::Parse, context(path, lineno) + ": expected header '" + want + "'");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::Parse, context(path, lineno) + ": expected " +
                                        std::to_string(header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, path, lineno));
    t.rows.push_back(std::move(row));
    t.lines.push_back(lineno);
  }
  if (in.bad()) throw Error(ErrorKind::Io, "read failure on '" + path + "'");
  if (!have_header) throw Error(ErrorKind::Parse, path + ": missing header");
  return t;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  return out;
}

inline void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failure on '" + path + "'");
}

/// Groups rows by identical leading timestamp; timestamps must not decrease.
template <class Fn>
void group_by_time(const Table& t, const std::string& path, Fn&& on_row) {
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i > 0 && t.rows[i][0] < t.rows[i - 1][0]) {
      throw Error(ErrorKind::Validation, context(path, t.lines[i]) + ": timestamps go backwards");
    }
    on_row(i, i == 0 || t.rows[i][0] != t.rows[i - 1][0]);
  }
}

}  // namespace detail

inline std::vector<RadarFrame> read_radar_csv(const std::string& path) {
  const auto t = detail::read_table(path, {"t_s", "azimuth_rad", "doppler_mps", "range_m", "amplitude"});
  std::vector<RadarFrame> frames;
  detail::group_by_time(t, path, [&](std::size_t i, bool new_frame) {
    const auto& r = t.rows[i];
    if (!(r[1] > -kPi && r[1] <= kPi)) {
      throw Error(ErrorKind::Validation, detail::context(path, t.lines[i]) + ": azimuth outside (-pi, pi]");
    }
    if (r[3] < 0.0) {
      throw Error(ErrorKind::Validation, detail::context(path, t.lines[i]) + ": negative range");
    }
    if (new_frame) frames.push_back({r[0], {}});
    frames.back().detections.push_back({Angle(r[1]), r[2], r[3], r[4]});
  });
  return frames;
}

inline void write_radar_csv(const std::string& path, const std::vector<RadarFrame>& frames) {
  auto out = detail::open_out(path);
  out << kFormatTag << "\n" << "t_s,azimuth_rad,doppler_mps,range_m,amplitude\n";
  for (const auto& f : frames) {
    for (const auto& d : f.detections) {
      out << detail::fmt(f.t) << ',' << detail::fmt(d.azimuth.rad()) << ',' << detail::fmt(d.doppler)
          << ',' << detail::fmt(d.range) << ',' << detail::fmt(d.amplitude) << '\n';
    }
  }
  detail::finish(out, path);
}

inline std::vector<ImuSample> read_imu_csv(const std::string& path) {
  const auto t = detail::read_table(path, {"t_s", "yaw_rate_radps"});
  std::vector<ImuSample> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i > 0 && !(t.rows[i][0] > t.rows[i - 1][0])) {
      throw Error(ErrorKind::Validation,
                  detail::context(path, t.lines[i]) + ": IMU timestamps must be strictly increasing");
    }
    out.push_back({t.rows[i][0], t.rows[i][1]});
  }
  return out;
}

inline void write_imu_csv(const std::string& path, const std::vector<ImuSample>& imu) {
  auto out = detail::open_out(path);
  out << kFormatTag << "\n" << "t_s,yaw_rate_radps\n";
  for (const auto& s : imu) out << detail::fmt(s.t) << ',' << detail::fmt(s.yaw_rate) << '\n';
  detail::finish(out, path);
}

/// External per-detection weights aligned index-for-index with `frames`.
inline std::vector<WeightVector> read_weights_csv(const std::string& path,
                                                  const std::vector<RadarFrame>& frames) {
  const auto t = detail::read_table(path, {"t_s", "weight"});
  std::vector<std::vector<double>> groups;
  std::vector<double> times;
  std::vector<std::size_t> first_line;
  detail::group_by_time(t, path, [&](std::size_t i, bool new_frame) {
    const double w = t.rows[i][1];
    if (!(w >= 0.0 && w <= 1.0)) {
      throw Error(ErrorKind::Validation, detail::context(path, t.lines[i]) + ": weight outside [0, 1]");
    }
    if (new_frame) {
      groups.emplace_back();
      times.push_back(t.rows[i][0]);
      first_line.push_back(t.lines[i]);
    }
    groups.back().push_back(w);
  });
  const std::size_t n = std::min(groups.size(), frames.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(times[k] - frames[k].t) > 1e-9 || groups[k].size() != frames[k].size()) {
      throw Error(ErrorKind::Alignment,
                  path + ": weights do not match radar frame " + std::to_string(k) + " (t=" +
                      detail::fmt(frames[k].t) + ", " + std::to_string(frames[k].size()) +
                      " detections; weights have " + std::to_string(groups[k].size()) + ")");
    }
  }
  if (groups.size() != frames.size()) {
    throw Error(ErrorKind::Alignment, path + ": weights cover " + std::to_string(groups.size()) +
                                          " frames, radar has " + std::to_string(frames.size()) +
                                          "; first unmatched frame " + std::to_string(n));
  }
  std::vector<WeightVector> out;
  out.reserve(groups.size());
  for (auto& g : groups) out.emplace_back(std::move(g));
  return out;
}

inline void write_weights_csv(const std::string& path, const std::vector<RadarFrame>& frames,
                              const std::vector<WeightVector>& weights) {
  if (weights.size() != frames.size()) {
    throw Error(ErrorKind::Alignment, "write_weights_csv: one weight vector per frame required");
  }
  auto out = detail::open_out(path);
  out << kFormatTag << "\n" << "t_s,weight\n";
  for (std::size_t k = 0; k < frames.size(); ++k) {
    if (weights[k].size() != frames[k].size()) {
      throw Error(ErrorKind::Alignment, "write_weights_csv: frame " + std::to_string(k) + " size mismatch");
    }
    for (std::size_t j = 0; j < weights[k].size(); ++j) {
      out << detail::fmt(frames[k].t) << ',' << detail::fmt(weights[k][j]) << '\n';
    }
  }
  detail::finish(out, path);
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  auto out = detail::open_out(path);
  out << kFormatTag << "\n" << "t_s,x_m,y_m,heading_rad\n";
  for (const auto& p : traj.poses) {
    out << detail::fmt(p.t) << ',' << detail::fmt(p.position.x) << ',' << detail::fmt(p.position.y)
        << ',' << detail::fmt(p.heading.rad()) << '\n';
  }
  detail::finish(out, path);
}

inline Trajectory read_trajectory_csv(const std::string& path) {
  const auto t = detail::read_table(path, {"t_s", "x_m", "y_m", "heading_rad"});
  Trajectory traj;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (i > 0 && !(t.rows[i][0] > t.rows[i - 1][0])) {
      throw Error(ErrorKind::Validation, detail::context(path, t.lines[i]) + ": timestamps must increase");
    }
    traj.poses.push_back({t.rows[i][0], {t.rows[i][1], t.rows[i][2]}, Angle(t.rows[i][3])});
  }
  return traj;
}

/// Rounds every floating-point value in the document to 12 significant digits
/// so serialized reports are short and stable.
inline void round_floats(nlohmann::json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      j = nullptr;
      return;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    j = std::strtod(buf, nullptr);
  } else if (j.is_object() || j.is_array()) {
    for (auto& el : j) round_floats(el);
  }
}

/// Deterministic JSON: sorted keys, 12 significant digits, trailing newline.
inline std::string dump_deterministic(nlohmann::json j) {
  round_floats(j);
  return j.dump(2) + "\n";
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  auto out = detail::open_out(path);
  out << dump_deterministic(j);
  detail::finish(out, path);
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "' for reading");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
}

/// One character per detection: s(tatic), m(over), c(lutter).
inline std::string encode_labels(const std::vector<DetectionLabel>& labels) {
  std::string s;
  s.reserve(labels.size());
  for (auto l : labels) s.push_back(to_string(l)[0]);
  return s;
}

inline std::vector<DetectionLabel> decode_labels(const std::string& s) {
  std::vector<DetectionLabel> out;
  for (char c : s) {
    switch (c) {
      case 's': out.push_back(DetectionLabel::Static); break;
      case 'm': out.push_back(DetectionLabel::Mover); break;
      case 'c': out.push_back(DetectionLabel::Clutter); break;
      default: throw Error(ErrorKind::Parse, std::string("unknown detection label '") + c + "'");
    }
  }
  return out;
}

}  // namespace radcal
