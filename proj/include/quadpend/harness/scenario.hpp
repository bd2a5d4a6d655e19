#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "quadpend/controllers/gains.hpp"
#include "quadpend/errors.hpp"
#include "quadpend/models.hpp"
#include "quadpend/trajectories.hpp"

namespace quadpend::harness {

enum class ControllerKind {
  kFblRegulator,
  kFblTracker,
  kClfQp,
  kPendXi,
  kPendXiPrime,
  kPendLqr,
};

// Attitude/altitude loop used underneath the pendulum controllers.
enum class InnerLoop { kFblTracker, kClfQp };

inline const char* to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::kFblRegulator: return "fbl-regulator";
    case ControllerKind::kFblTracker: return "fbl-tracker";
    case ControllerKind::kClfQp: return "clf-qp";
    case ControllerKind::kPendXi: return "pend-xi";
    case ControllerKind::kPendXiPrime: return "pend-xi-prime";
    case ControllerKind::kPendLqr: return "pend-lqr";
  }
  return "unknown";
}

inline ControllerKind controller_kind_from_string(const std::string& s) {
  for (auto k : {ControllerKind::kFblRegulator, ControllerKind::kFblTracker,
                 ControllerKind::kClfQp, ControllerKind::kPendXi,
                 ControllerKind::kPendXiPrime, ControllerKind::kPendLqr}) {
    if (s == to_string(k)) return k;
  }
  throw ValidationError("unknown controller kind '" + s + "'");
}

inline const char* to_string(InnerLoop k) {
  return k == InnerLoop::kClfQp ? "clf-qp" : "fbl-tracker";
}

inline InnerLoop inner_loop_from_string(const std::string& s) {
  if (s == "fbl-tracker") return InnerLoop::kFblTracker;
  if (s == "clf-qp") return InnerLoop::kClfQp;
  throw ValidationError("unknown inner loop '" + s + "'");
}

inline bool is_pendulum_controller(ControllerKind k) {
  return k == ControllerKind::kPendXi || k == ControllerKind::kPendXiPrime ||
         k == ControllerKind::kPendLqr;
}

// Additive zero-mean Gaussian process noise on the translational and angular
// acceleration channels, drawn once per step and held over it. The standard
// deviations refer to the reference step kNoiseReferenceDt and are scaled by
// sqrt(kNoiseReferenceDt / dt) so the noise intensity does not depend on dt.
inline constexpr double kNoiseReferenceDt = 1e-3;

struct NoiseSpec {
  bool enabled = false;
  Vec3 accel_std = Vec3::Constant(0.2);    // m/s^2
  Vec3 angular_std = Vec3::Constant(0.1);  // rad/s^2
  std::uint64_t seed = 0;
};

struct Scenario {
  std::string name = "unnamed";
  std::string description;

  VehicleParams vehicle;
  bool has_pendulum = false;
  PendulumParams pendulum;

  ControllerKind controller = ControllerKind::kFblTracker;
  InnerLoop inner = InnerLoop::kFblTracker;
  controllers::ControllerGains gains;

  trajectories::TrajectorySpec trajectory;

  QuadState initial_quad;
  PendulumState initial_pendulum;

  double duration = 10.0;
  double dt = 1e-3;
  NoiseSpec noise;
  // Spacing of the finite-difference stencil for attitude set-point
  // derivatives (s); rounded to a whole number of steps.
  double diff_spacing = 0.01;

  // Metrics settings.
  double tail_fraction = 0.5;
  double settle_band = 0.02;

  // Aborts when a^2 + b^2 exceeds (margin L)^2.
  double pendulum_margin = 0.999;
  int max_consecutive_faults = 50;

  int diff_stride() const {
    return std::max(1, static_cast<int>(std::lround(diff_spacing / dt)));
  }

  std::size_t step_count() const {
    return static_cast<std::size_t>(std::llround(duration / dt));
  }

  void validate() const {
    auto require = [&](bool ok, const std::string& msg) {
      if (!ok) throw ValidationError("scenario '" + name + "': " + msg);
    };
    require(duration > 0.0 && std::isfinite(duration), "duration must be > 0");
    require(dt > 0.0 && std::isfinite(dt), "dt must be > 0");
    require(dt <= duration, "dt must not exceed duration");
    require(std::abs(duration / dt - std::round(duration / dt)) < 1e-6,
            "duration must be an integer multiple of dt");
    require(diff_spacing > 0.0 && diff_spacing < duration,
            "differentiator spacing must be in (0, duration)");
    require(tail_fraction >= 0.0 && tail_fraction < 1.0,
            "metrics.tail_fraction must be in [0, 1)");
    require(settle_band > 0.0 && settle_band < 1.0,
            "metrics.settle_band must be in (0, 1)");
    require(pendulum_margin > 0.0 && pendulum_margin < 1.0,
            "pendulum margin must be in (0, 1)");
    require(max_consecutive_faults > 0, "max_consecutive_faults must be > 0");
    try {
      vehicle.validate();
      if (has_pendulum) pendulum.validate();
      trajectory.validate();
    } catch (const InvalidParamsError& e) {
      require(false, e.what());
    } catch (const ValidationError& e) {
      require(false, e.what());
    }
    require(initial_quad.finite(), "initial state must be finite");
    require(std::abs(initial_quad.q.y()) < kHalfPi,
            "initial pitch must satisfy |theta| < pi/2");
    if (is_pendulum_controller(controller)) {
      require(has_pendulum, std::string("controller ") + to_string(controller) +
                                " requires pendulum parameters");
    }
    if (has_pendulum) {
      const PendulumState& ps = initial_pendulum;
      const double r2 = ps.a * ps.a + ps.b * ps.b;
      require(r2 < std::pow(pendulum_margin * pendulum.L, 2),
              "initial pendulum offset must satisfy a^2 + b^2 < L^2");
    }
    const auto& g = gains;
    require((g.alpha1.array() > 0).all() && (g.alpha2.array() > 0).all(),
            "alpha gains must be positive");
    require((g.kp.array() > 0).all() && (g.kd.array() > 0).all(),
            "position gains must be positive");
    require((g.q_care.array() > 0).all(), "gains.q_care must be positive");
    require((g.k1.array() > 0).all() && (g.k2.array() > 0).all(),
            "pendulum gains must be positive");
    require((g.q_lqr.array() > 0).all() && (g.r_lqr.array() > 0).all(),
            "LQR weights must be positive");
    require(g.lqr_angle_limit > 0.0 && g.lqr_angle_limit < kHalfPi,
            "gains.lqr_angle_limit must be in (0, pi/2)");
    require(g.clf_slack_weight > 0.0, "gains.clf_slack_weight must be > 0");
    require((noise.accel_std.array() >= 0).all() &&
                (noise.angular_std.array() >= 0).all(),
            "noise standard deviations must be >= 0");
  }
};

}  // namespace quadpend::harness
