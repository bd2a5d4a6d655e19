#pragma once

// Scenario files: flat `key = value` lines, `#` comments, SI units.
//
//   name = fig3-circle-fbl
//   controller = fbl-tracker
//   trajectory.kind = takeoff-then-circle
//   initial.position = 1 0 0
//
// Vector values are whitespace or comma separated; a single number fills
// every component. Unknown keys, duplicates and malformed values are
// rejected with the offending key and line. An optional trailing section
//
//   [batch]
//   slow = trajectory.rate=0.25
//   wide = trajectory.radius=2; noise.enabled=true
//
// lists named override sets, each producing one extra run.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "quadpend/errors.hpp"
#include "quadpend/harness/scenario.hpp"

namespace quadpend::io {

struct Entry {
  std::string key;
  std::string value;
  std::string origin;  // "file:line" or "--set"
};

struct BatchRun {
  std::string label;
  std::vector<Entry> overrides;
};

struct ScenarioDocument {
  std::string source;
  std::vector<Entry> entries;
  std::vector<BatchRun> batch;
};

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string strip_comment(const std::string& line) {
  const auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

// "key = value" -> (key, value); throws on a missing '=' or empty key.
inline std::pair<std::string, std::string> split_assignment(
    const std::string& text, const std::string& origin) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) {
    throw ValidationError(origin + ": expected 'key = value', got '" + text + "'");
  }
  std::string key = trim(std::string_view(text).substr(0, eq));
  std::string value = trim(std::string_view(text).substr(eq + 1));
  if (key.empty()) throw ValidationError(origin + ": empty key");
  return {key, value};
}

inline double parse_number(const std::string& s, const Entry& e) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw ValidationError(e.origin + ": key '" + e.key + "' expects a number, got '" +
                          e.value + "'");
  }
  return v;
}

inline std::vector<double> parse_numbers(const Entry& e) {
  std::string text = e.value;
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream is(text);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(parse_number(tok, e));
  if (out.empty()) {
    throw ValidationError(e.origin + ": key '" + e.key + "' has no value");
  }
  return out;
}

template <int N>
Eigen::Matrix<double, N, 1> parse_vector(const Entry& e) {
  const std::vector<double> v = parse_numbers(e);
  if (v.size() == 1) return Eigen::Matrix<double, N, 1>::Constant(v[0]);
  if (static_cast<int>(v.size()) != N) {
    throw ValidationError(e.origin + ": key '" + e.key + "' expects 1 or " +
                          std::to_string(N) + " numbers, got " +
                          std::to_string(v.size()));
  }
  return Eigen::Map<const Eigen::Matrix<double, N, 1>>(v.data());
}

inline double parse_scalar(const Entry& e) {
  const std::vector<double> v = parse_numbers(e);
  if (v.size() != 1) {
    throw ValidationError(e.origin + ": key '" + e.key + "' expects one number");
  }
  return v[0];
}

inline bool parse_bool(const Entry& e) {
  if (e.value == "true" || e.value == "1" || e.value == "yes") return true;
  if (e.value == "false" || e.value == "0" || e.value == "no") return false;
  throw ValidationError(e.origin + ": key '" + e.key + "' expects true or false, got '" +
                        e.value + "'");
}

inline std::uint64_t parse_seed(const Entry& e) {
  std::uint64_t v = 0;
  const auto [ptr, ec] =
      std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
  if (ec != std::errc() || ptr != e.value.data() + e.value.size() || e.value.empty()) {
    throw ValidationError(e.origin + ": key '" + e.key +
                          "' expects a non-negative integer, got '" + e.value + "'");
  }
  return v;
}

inline int parse_int(const Entry& e) {
  const double v = parse_scalar(e);
  if (v != std::floor(v)) {
    throw ValidationError(e.origin + ": key '" + e.key + "' expects an integer");
  }
  return static_cast<int>(v);
}

// Wraps model/enum errors so they carry the entry's origin.
template <typename F>
auto with_origin(const Entry& e, F&& f) {
  try {
    return f();
  } catch (const ValidationError& err) {
    const std::string what = err.what();
    if (what.rfind(e.origin, 0) == 0) throw;
    throw ValidationError(e.origin + ": key '" + e.key + "': " + what);
  }
}

using Setter = std::function<void(harness::Scenario&, const Entry&)>;

inline const std::map<std::string, Setter>& setters() {
  using harness::Scenario;
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["name"] = [](Scenario& s, const Entry& e) { s.name = e.value; };
    t["description"] = [](Scenario& s, const Entry& e) { s.description = e.value; };
    t["controller"] = [](Scenario& s, const Entry& e) {
      s.controller = with_origin(e, [&] { return harness::controller_kind_from_string(e.value); });
    };
    t["inner"] = [](Scenario& s, const Entry& e) {
      s.inner = with_origin(e, [&] { return harness::inner_loop_from_string(e.value); });
    };
    t["duration"] = [](Scenario& s, const Entry& e) { s.duration = parse_scalar(e); };
    t["dt"] = [](Scenario& s, const Entry& e) { s.dt = parse_scalar(e); };
    t["differentiator.spacing"] = [](Scenario& s, const Entry& e) {
      s.diff_spacing = parse_scalar(e);
    };

    t["vehicle.m"] = [](Scenario& s, const Entry& e) { s.vehicle.m = parse_scalar(e); };
    t["vehicle.inertia"] = [](Scenario& s, const Entry& e) {
      s.vehicle.inertia = parse_vector<3>(e);
    };
    t["vehicle.rho"] = [](Scenario& s, const Entry& e) { s.vehicle.rho = parse_scalar(e); };
    t["vehicle.D"] = [](Scenario& s, const Entry& e) { s.vehicle.D = parse_scalar(e); };
    t["vehicle.C_T"] = [](Scenario& s, const Entry& e) { s.vehicle.C_T = parse_scalar(e); };
    t["vehicle.C_Q"] = [](Scenario& s, const Entry& e) { s.vehicle.C_Q = parse_scalar(e); };
    t["vehicle.l"] = [](Scenario& s, const Entry& e) { s.vehicle.l = parse_scalar(e); };
    t["vehicle.g"] = [](Scenario& s, const Entry& e) { s.vehicle.g = parse_scalar(e); };
    t["vehicle.u_min"] = [](Scenario& s, const Entry& e) { s.vehicle.u_min = parse_vector<4>(e); };
    t["vehicle.u_max"] = [](Scenario& s, const Entry& e) { s.vehicle.u_max = parse_vector<4>(e); };

    t["pendulum.enabled"] = [](Scenario& s, const Entry& e) { s.has_pendulum = parse_bool(e); };
    t["pendulum.L"] = [](Scenario& s, const Entry& e) { s.pendulum.L = parse_scalar(e); };
    t["pendulum.m_p"] = [](Scenario& s, const Entry& e) { s.pendulum.m_p = parse_scalar(e); };

    t["gains.alpha1"] = [](Scenario& s, const Entry& e) { s.gains.alpha1 = parse_vector<4>(e); };
    t["gains.alpha2"] = [](Scenario& s, const Entry& e) { s.gains.alpha2 = parse_vector<4>(e); };
    t["gains.kp"] = [](Scenario& s, const Entry& e) { s.gains.kp = parse_vector<3>(e); };
    t["gains.kd"] = [](Scenario& s, const Entry& e) { s.gains.kd = parse_vector<3>(e); };
    t["gains.q_care"] = [](Scenario& s, const Entry& e) { s.gains.q_care = parse_vector<8>(e); };
    t["gains.k1"] = [](Scenario& s, const Entry& e) { s.gains.k1 = parse_vector<2>(e); };
    t["gains.k2"] = [](Scenario& s, const Entry& e) { s.gains.k2 = parse_vector<2>(e); };
    t["gains.q_lqr"] = [](Scenario& s, const Entry& e) { s.gains.q_lqr = parse_vector<8>(e); };
    t["gains.r_lqr"] = [](Scenario& s, const Entry& e) { s.gains.r_lqr = parse_vector<2>(e); };
    t["gains.lqr_angle_limit"] = [](Scenario& s, const Entry& e) {
      s.gains.lqr_angle_limit = parse_scalar(e);
    };
    t["gains.clf_slack_weight"] = [](Scenario& s, const Entry& e) {
      s.gains.clf_slack_weight = parse_scalar(e);
    };

    t["trajectory.kind"] = [](Scenario& s, const Entry& e) {
      s.trajectory.kind =
          with_origin(e, [&] { return trajectories::trajectory_kind_from_string(e.value); });
    };
    t["trajectory.radius"] = [](Scenario& s, const Entry& e) {
      s.trajectory.radius = parse_scalar(e);
    };
    t["trajectory.rate"] = [](Scenario& s, const Entry& e) { s.trajectory.rate = parse_scalar(e); };
    t["trajectory.altitude"] = [](Scenario& s, const Entry& e) {
      s.trajectory.altitude = parse_scalar(e);
    };
    t["trajectory.setpoint"] = [](Scenario& s, const Entry& e) {
      s.trajectory.setpoint = parse_vector<3>(e);
    };
    t["trajectory.transition_time"] = [](Scenario& s, const Entry& e) {
      s.trajectory.transition_time = parse_scalar(e);
    };
    t["trajectory.blend_window"] = [](Scenario& s, const Entry& e) {
      s.trajectory.blend_window = parse_scalar(e);
    };
    t["trajectory.blend"] = [](Scenario& s, const Entry& e) { s.trajectory.blend = parse_bool(e); };

    t["initial.position"] = [](Scenario& s, const Entry& e) { s.initial_quad.p = parse_vector<3>(e); };
    t["initial.velocity"] = [](Scenario& s, const Entry& e) { s.initial_quad.v = parse_vector<3>(e); };
    t["initial.attitude"] = [](Scenario& s, const Entry& e) { s.initial_quad.q = parse_vector<3>(e); };
    t["initial.rates"] = [](Scenario& s, const Entry& e) { s.initial_quad.omega = parse_vector<3>(e); };
    t["initial.pendulum"] = [](Scenario& s, const Entry& e) {
      s.initial_pendulum = PendulumState::from_vector(parse_vector<4>(e));
    };

    t["noise.enabled"] = [](Scenario& s, const Entry& e) { s.noise.enabled = parse_bool(e); };
    t["noise.accel_std"] = [](Scenario& s, const Entry& e) {
      s.noise.accel_std = parse_vector<3>(e);
    };
    t["noise.angular_std"] = [](Scenario& s, const Entry& e) {
      s.noise.angular_std = parse_vector<3>(e);
    };
    t["noise.seed"] = [](Scenario& s, const Entry& e) { s.noise.seed = parse_seed(e); };

    t["metrics.tail_fraction"] = [](Scenario& s, const Entry& e) {
      s.tail_fraction = parse_scalar(e);
    };
    t["metrics.settle_band"] = [](Scenario& s, const Entry& e) {
      s.settle_band = parse_scalar(e);
    };
    t["limits.pendulum_margin"] = [](Scenario& s, const Entry& e) {
      s.pendulum_margin = parse_scalar(e);
    };
    t["limits.max_consecutive_faults"] = [](Scenario& s, const Entry& e) {
      s.max_consecutive_faults = parse_int(e);
    };
    return t;
  }();
  return table;
}

}  // namespace detail

inline std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : detail::setters()) keys.push_back(k);
  return keys;
}

inline ScenarioDocument parse_scenario_text(const std::string& text,
                                            const std::string& source) {
  ScenarioDocument doc;
  doc.source = source;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  bool in_batch = false;
  std::map<std::string, std::string> seen;  // key -> origin
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string origin = source + ":" + std::to_string(line_no);
    const std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[batch]") {
        throw ValidationError(origin + ": unknown section '" + line + "'");
      }
      if (in_batch) throw ValidationError(origin + ": duplicate [batch] section");
      in_batch = true;
      continue;
    }
    auto [key, value] = detail::split_assignment(line, origin);
    if (!in_batch) {
      if (!detail::setters().count(key)) {
        throw ValidationError(origin + ": unknown key '" + key + "'");
      }
      if (auto it = seen.find(key); it != seen.end()) {
        throw ValidationError(origin + ": duplicate key '" + key +
                              "' (first set at " + it->second + ")");
      }
      seen[key] = origin;
      doc.entries.push_back({key, value, origin});
      continue;
    }
    BatchRun run;
    run.label = key;
    for (const auto& b : doc.batch) {
      if (b.label == key) {
        throw ValidationError(origin + ": duplicate batch label '" + key + "'");
      }
    }
    std::istringstream parts(value);
    std::string part;
    while (std::getline(parts, part, ';')) {
      if (detail::trim(part).empty()) continue;
      auto [k, v] = detail::split_assignment(detail::trim(part), origin);
      if (!detail::setters().count(k)) {
        throw ValidationError(origin + ": unknown key '" + k + "' in batch run '" +
                              key + "'");
      }
      run.overrides.push_back({k, v, origin});
    }
    doc.batch.push_back(std::move(run));
  }
  return doc;
}

inline ScenarioDocument load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(), path);
}

// Parses a `--set key=value` argument.
inline Entry parse_override(const std::string& text) {
  auto [key, value] = detail::split_assignment(text, "--set " + text);
  if (!detail::setters().count(key)) {
    throw ValidationError("--set: unknown key '" + key + "'");
  }
  return {key, value, "--set " + key};
}

// Builds a scenario from entries applied in order. The rotor upper bound
// follows the vehicle parameters unless vehicle.u_max is given.
inline harness::Scenario build_scenario(const std::vector<Entry>& entries) {
  harness::Scenario sc;
  bool u_max_explicit = false;
  for (const Entry& e : entries) {
    const auto it = detail::setters().find(e.key);
    if (it == detail::setters().end()) {
      throw ValidationError(e.origin + ": unknown key '" + e.key + "'");
    }
    it->second(sc, e);
    if (e.key == "vehicle.u_max") u_max_explicit = true;
  }
  if (!u_max_explicit) {
    const VehicleParams& v = sc.vehicle;
    if (v.rho > 0 && v.D > 0 && v.C_T > 0) {
      sc.vehicle.u_max = Vec4::Constant(
          VehicleParams::default_rotor_max(v.m, v.g, v.rho, v.D, v.C_T));
    }
  }
  return sc;
}

// Replaces entries with the same key, appends new ones.
inline std::vector<Entry> apply_overrides(std::vector<Entry> entries,
                                          const std::vector<Entry>& overrides) {
  for (const Entry& o : overrides) {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const Entry& e) { return e.key == o.key; });
    if (it != entries.end()) {
      *it = o;
    } else {
      entries.push_back(o);
    }
  }
  return entries;
}

struct ScenarioRun {
  std::string label;  // empty for the base run
  harness::Scenario scenario;
};

// Base run plus one run per batch entry, each validated. Batch runs are
// named "<name>-<label>".
inline std::vector<ScenarioRun> expand_document(const ScenarioDocument& doc,
                                                const std::vector<Entry>& overrides) {
  std::vector<ScenarioRun> runs;
  const std::vector<Entry> base = apply_overrides(doc.entries, overrides);
  harness::Scenario sc = build_scenario(base);
  sc.validate();
  runs.push_back({"", sc});
  for (const BatchRun& b : doc.batch) {
    // Command-line overrides win over batch entries.
    std::vector<Entry> entries = apply_overrides(doc.entries, b.overrides);
    entries = apply_overrides(entries, overrides);
    harness::Scenario bs = build_scenario(entries);
    bs.name = sc.name + "-" + b.label;
    bs.validate();
    runs.push_back({b.label, bs});
  }
  return runs;
}

}  // namespace quadpend::io
