#pragma once

// Time-series and metrics output. Numbers are written as the shortest
// decimal that parses back to the same double; missing values (pendulum
// columns of a quadrotor-only run, CLF columns of other controllers) are
// empty fields in CSV and null in JSON.

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "quadpend/errors.hpp"
#include "quadpend/harness/metrics.hpp"
#include "quadpend/harness/simulator.hpp"

namespace quadpend::io {

enum class Format { kCsv, kJson };

inline Format format_from_string(const std::string& s) {
  if (s == "csv") return Format::kCsv;
  if (s == "json") return Format::kJson;
  throw ValidationError("unknown output format '" + s + "'");
}

class OutputError : public Error {
 public:
  using Error::Error;
};

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "t",       "p_X",     "p_Y",     "p_Z",   "v_X",   "v_Y",   "v_Z",
      "phi",     "theta",   "psi",     "w_x",   "w_y",   "w_z",   "a",
      "b",       "a_dot",   "b_dot",   "u1",    "u2",    "u3",    "u4",
      "f_z",     "tau_x",   "tau_y",   "tau_z", "phi_d", "theta_d", "psi_d",
      "p_Xd",    "p_Yd",    "p_Zd",    "a_d",   "b_d",   "clamped", "relaxed",
      "fault",   "startup", "clf_V",   "clf_Vdot"};
  return cols;
}

// One row, aligned with csv_columns(); nullopt marks a missing value.
inline std::vector<std::optional<double>> record_row(const harness::StepRecord& r) {
  std::vector<std::optional<double>> row;
  row.reserve(csv_columns().size());
  auto put = [&](double x) { row.emplace_back(x); };
  auto put_nan_empty = [&](double x) {
    if (std::isnan(x)) {
      row.emplace_back(std::nullopt);
    } else {
      row.emplace_back(x);
    }
  };
  put(r.t);
  for (int i = 0; i < 3; ++i) put(r.quad.p[i]);
  for (int i = 0; i < 3; ++i) put(r.quad.v[i]);
  for (int i = 0; i < 3; ++i) put(r.quad.q[i]);
  for (int i = 0; i < 3; ++i) put(r.quad.omega[i]);
  if (r.pendulum) {
    const Vec4 x = r.pendulum->to_vector();
    for (int i = 0; i < 4; ++i) put(x[i]);
  } else {
    for (int i = 0; i < 4; ++i) row.emplace_back(std::nullopt);
  }
  const Vec4 u = r.command.u();
  for (int i = 0; i < 4; ++i) put(u[i]);
  const Vec4 w = r.command.wrench();
  for (int i = 0; i < 4; ++i) put(w[i]);
  for (int i = 0; i < 3; ++i) put(r.setpoint.q_d[i]);
  for (int i = 0; i < 3; ++i) put(r.position_ref[i]);
  if (r.pendulum_ref) {
    put((*r.pendulum_ref)[0]);
    put((*r.pendulum_ref)[1]);
  } else {
    row.emplace_back(std::nullopt);
    row.emplace_back(std::nullopt);
  }
  put(r.clamped);
  put(r.relaxed);
  put(r.fault);
  put(r.startup);
  put_nan_empty(r.clf_V);
  put_nan_empty(r.clf_V_dot);
  return row;
}

inline std::string format_double(double x) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf.data(), ptr);
}

inline void write_csv(std::ostream& os, const harness::SimLog& log) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : log.records) {
    const auto row = record_row(r);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      if (row[i]) os << format_double(*row[i]);
    }
    os << '\n';
  }
}

inline nlohmann::json log_to_json(const harness::SimLog& log) {
  nlohmann::json series = nlohmann::json::object();
  const auto& cols = csv_columns();
  for (const auto& c : cols) series[c] = nlohmann::json::array();
  for (const auto& r : log.records) {
    const auto row = record_row(r);
    for (std::size_t i = 0; i < row.size(); ++i) {
      series[cols[i]].push_back(row[i] ? nlohmann::json(*row[i]) : nlohmann::json());
    }
  }
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : log.events) {
    events.push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
  }
  nlohmann::json out = {{"scenario", log.scenario},
                        {"dt", log.dt},
                        {"aborted", log.aborted},
                        {"series", series},
                        {"events", events}};
  if (log.aborted) {
    out["abort_time"] = log.abort_time;
    out["abort_reason"] = log.abort_reason;
  }
  return out;
}

inline nlohmann::json metrics_to_json(const harness::SimLog& log,
                                      const harness::Metrics& m) {
  nlohmann::json out = nlohmann::json::object();
  out["scenario"] = log.scenario;
  for (const auto& [k, v] : m) {
    out[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json();
  }
  if (log.aborted) out["abort_reason"] = log.abort_reason;
  return out;
}

struct EmittedFiles {
  std::filesystem::path series;
  std::filesystem::path metrics;
};

// Writes <dir>/<scenario>.csv|json and <dir>/<scenario>.metrics.json.
inline EmittedFiles emit_log(const harness::SimLog& log, const harness::Metrics& m,
                             const std::filesystem::path& dir, Format format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create output directory '" + dir.string() + "'");
  EmittedFiles files;
  files.series = dir / (log.scenario + (format == Format::kCsv ? ".csv" : ".json"));
  files.metrics = dir / (log.scenario + ".metrics.json");
  {
    std::ofstream os(files.series, std::ios::binary);
    if (!os) throw OutputError("cannot write '" + files.series.string() + "'");
    if (format == Format::kCsv) {
      write_csv(os, log);
    } else {
      os << log_to_json(log).dump() << '\n';
    }
    if (!os) throw OutputError("write failed for '" + files.series.string() + "'");
  }
  {
    std::ofstream os(files.metrics, std::ios::binary);
    if (!os) throw OutputError("cannot write '" + files.metrics.string() + "'");
    os << metrics_to_json(log, m).dump(2) << '\n';
    if (!os) throw OutputError("write failed for '" + files.metrics.string() + "'");
  }
  return files;
}

// Parsed CSV: header plus rows with nullopt for empty fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;
};

inline CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw Error("empty CSV");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) table.header.push_back(cell);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::optional<double>> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t end = line.find(',', start);
      const std::string cell =
          line.substr(start, end == std::string::npos ? std::string::npos : end - start);
      if (cell.empty()) {
        row.emplace_back(std::nullopt);
      } else {
        double v = 0.0;
        const auto [ptr, err] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (err != std::errc() || ptr != cell.data() + cell.size()) {
          throw Error("bad CSV field '" + cell + "'");
        }
        row.emplace_back(v);
      }
      if (end == std::string::npos) break;
      start = end + 1;
    }
    if (row.size() != table.header.size()) throw Error("CSV row width mismatch");
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace quadpend::io
