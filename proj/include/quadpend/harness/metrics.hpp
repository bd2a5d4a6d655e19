#pragma once

// Summary metrics derived from a SimLog. Nothing here is stored in the log;
// every number can be recomputed from the time series.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "quadpend/errors.hpp"
#include "quadpend/harness/simulator.hpp"

namespace quadpend::harness {

struct MetricSpec {
  double tail_fraction = 0.5;  // RMS window is [tail_fraction T, T]
  double settle_band = 0.02;   // relative to the peak magnitude
  double sign_band = 0.01;     // hysteresis for sign changes, relative to peak
};

inline double rms(const std::vector<double>& v) {
  if (v.empty()) throw Error("RMS over an empty window");
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Last time |e| was outside band * max|e|; 0 when the signal never leaves it.
inline double settling_time(const std::vector<double>& t,
                            const std::vector<double>& e, double band) {
  if (t.empty()) throw Error("settling time of an empty series");
  double peak = 0.0;
  for (double x : e) peak = std::max(peak, std::abs(x));
  const double limit = band * peak;
  for (std::size_t i = e.size(); i-- > 0;) {
    if (std::abs(e[i]) > limit) {
      return i + 1 < t.size() ? t[i + 1] : t[i];
    }
  }
  return t.front();
}

// Sign changes after the first peak of |e|. A change counts only when the
// signal crosses from beyond +band to beyond -band (or back), where band is
// relative to that peak, so numerical chatter around zero is ignored.
inline int sign_changes_after_peak(const std::vector<double>& e,
                                   double band_fraction) {
  if (e.empty()) return 0;
  std::size_t ipeak = 0;
  for (std::size_t i = 1; i < e.size(); ++i) {
    if (std::abs(e[i]) > std::abs(e[ipeak])) ipeak = i;
  }
  const double band = band_fraction * std::abs(e[ipeak]);
  if (band == 0.0) return 0;
  int sign = e[ipeak] > 0 ? 1 : -1;
  int changes = 0;
  for (std::size_t i = ipeak; i < e.size(); ++i) {
    if (sign > 0 && e[i] < -band) {
      sign = -1;
      ++changes;
    } else if (sign < 0 && e[i] > band) {
      sign = 1;
      ++changes;
    }
  }
  return changes;
}

using Metrics = std::map<std::string, double>;

inline std::size_t tail_start(const SimLog& log, double tail_fraction) {
  const double t_end = log.records.back().t;
  const double t0 = tail_fraction * t_end;
  std::size_t i = 0;
  while (i < log.records.size() && log.records[i].t < t0 - 1e-12) ++i;
  return i;
}

inline std::vector<double> series(const SimLog& log,
                                  const std::function<double(const StepRecord&)>& f,
                                  std::size_t from = 0) {
  std::vector<double> out;
  out.reserve(log.records.size() - std::min(from, log.records.size()));
  for (std::size_t i = from; i < log.records.size(); ++i) {
    out.push_back(f(log.records[i]));
  }
  return out;
}

inline Metrics compute_metrics(const SimLog& log, const MetricSpec& spec = {}) {
  if (log.records.empty()) throw Error("cannot compute metrics of an empty log");
  const std::size_t i0 = tail_start(log, spec.tail_fraction);
  if (i0 >= log.records.size()) throw Error("metrics tail window is empty");

  Metrics m;
  m["duration"] = log.records.back().t;
  m["steps"] = static_cast<double>(log.records.size());
  m["aborted"] = log.aborted ? 1.0 : 0.0;
  if (log.aborted) m["abort_time"] = log.abort_time;

  const char* axes[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    m[std::string("rms_position_error_") + axes[a]] = rms(series(
        log, [a](const StepRecord& r) { return r.quad.p[a] - r.position_ref[a]; },
        i0));
  }
  m["rms_position_error"] = rms(series(
      log, [](const StepRecord& r) { return (r.quad.p - r.position_ref).norm(); },
      i0));
  m["rms_horizontal_error"] = rms(series(
      log,
      [](const StepRecord& r) {
        return (r.quad.p - r.position_ref).head<2>().norm();
      },
      i0));

  const std::vector<double> t = series(log, [](const StepRecord& r) { return r.t; });
  m["settling_time_position"] = settling_time(
      t,
      series(log, [](const StepRecord& r) { return (r.quad.p - r.position_ref).norm(); }),
      spec.settle_band);

  double peak_accel = 0.0, max_violation = 0.0, max_clf = -std::numeric_limits<double>::infinity();
  int clamps = 0, relaxed = 0, faults = 0;
  for (const StepRecord& r : log.records) {
    peak_accel = std::max(peak_accel, r.commanded_accel.norm());
    clamps += r.clamped;
    relaxed += r.relaxed;
    faults += r.fault;
    if (std::isfinite(r.clf_V_dot)) {
      max_clf = std::max(max_clf, r.clf_V_dot + log.clf_c3 * r.clf_V);
    }
  }
  m["peak_commanded_accel"] = peak_accel;
  m["clamp_events"] = clamps;
  m["qp_relaxations"] = relaxed;
  m["faults"] = faults;
  // Distance of the raw controller output from the applied (clamped) command.
  for (const StepRecord& r : log.records) {
    max_violation = std::max(max_violation, (r.u_raw - r.command.u()).cwiseAbs().maxCoeff());
  }
  m["max_rotor_violation"] = max_violation;
  if (std::isfinite(max_clf)) m["max_clf_decrease_violation"] = max_clf;

  if (log.has_pendulum) {
    auto offset = [](const StepRecord& r) {
      return r.pendulum ? r.pendulum->offset().norm() : 0.0;
    };
    auto pend_err = [](const StepRecord& r) {
      return (r.pendulum->offset() - *r.pendulum_ref).norm();
    };
    const std::vector<double> off = series(log, offset);
    m["peak_pendulum_offset"] = *std::max_element(off.begin(), off.end());
    m["final_pendulum_offset"] = off.back();
    m["rms_pendulum_error"] = rms(series(log, pend_err, i0));
    m["settling_time_pendulum"] =
        settling_time(t, series(log, pend_err), spec.settle_band);
    m["overshoot_a"] = sign_changes_after_peak(
        series(log,
               [](const StepRecord& r) {
                 return r.pendulum->a - (*r.pendulum_ref)[0];
               }),
        spec.sign_band);
    m["overshoot_b"] = sign_changes_after_peak(
        series(log,
               [](const StepRecord& r) {
                 return r.pendulum->b - (*r.pendulum_ref)[1];
               }),
        spec.sign_band);
    const std::vector<double> dist = series(
        log, [](const StepRecord& r) { return r.quad.p.head<2>().norm(); });
    m["peak_horizontal_distance"] = *std::max_element(dist.begin(), dist.end());
  }
  return m;
}

}  // namespace quadpend::harness
