#pragma once

// Reference generators and the finite-difference stream used to obtain
// attitude set-point derivatives.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quadpend/errors.hpp"
#include "quadpend/models.hpp"

namespace quadpend::trajectories {

enum class TrajectoryKind { kSetPoint, kCircle, kTakeoffThenCircle, kPendulumCircle };

inline const char* to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::kSetPoint: return "set-point";
    case TrajectoryKind::kCircle: return "circle";
    case TrajectoryKind::kTakeoffThenCircle: return "takeoff-then-circle";
    case TrajectoryKind::kPendulumCircle: return "pendulum-circle";
  }
  return "unknown";
}

inline TrajectoryKind trajectory_kind_from_string(const std::string& s) {
  if (s == "set-point") return TrajectoryKind::kSetPoint;
  if (s == "circle") return TrajectoryKind::kCircle;
  if (s == "takeoff-then-circle") return TrajectoryKind::kTakeoffThenCircle;
  if (s == "pendulum-circle") return TrajectoryKind::kPendulumCircle;
  throw ValidationError("unknown trajectory kind '" + s + "'");
}

// Altitudes are heights (positive up); the world frame is Z-down, so the
// corresponding p_Z is negative.
struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kSetPoint;
  double radius = 1.0;           // circle radius (m); pendulum circle: offset radius
  double rate = 0.5;             // angular rate k (rad/s)
  double altitude = 2.0;         // circle height (m)
  Vec3 setpoint = Vec3::Zero();  // set-point, or held position for pendulum-circle
  double transition_time = 5.0;  // takeoff duration (s)
  double blend_window = 2.0;     // hover-to-circle rate ramp (s)
  bool blend = true;             // false reproduces the raw velocity jump

  void validate() const {
    if (!(radius >= 0.0)) throw ValidationError("trajectory.radius must be >= 0");
    if (!std::isfinite(rate)) throw ValidationError("trajectory.rate must be finite");
    if (!setpoint.allFinite() || !std::isfinite(altitude)) {
      throw ValidationError("trajectory values must be finite");
    }
    if (kind == TrajectoryKind::kTakeoffThenCircle) {
      if (!(transition_time > 0.0)) {
        throw ValidationError("trajectory.transition_time must be > 0");
      }
      if (blend && !(blend_window > 0.0)) {
        throw ValidationError("trajectory.blend_window must be > 0");
      }
    }
  }
};

template <int N>
struct Channel {
  Eigen::Matrix<double, N, 1> value = Eigen::Matrix<double, N, 1>::Zero();
  Eigen::Matrix<double, N, 1> d1 = Eigen::Matrix<double, N, 1>::Zero();
  Eigen::Matrix<double, N, 1> d2 = Eigen::Matrix<double, N, 1>::Zero();
};

struct ReferenceSample {
  double t = 0.0;
  Channel<3> position;  // vehicle position (world, Z-down)
  Channel<2> pendulum;  // pendulum offsets (a, b)
};

namespace detail {

// Quintic smooth step on [0, 1] with zero first and second derivatives at
// both ends. Returns (s, s', s'').
inline Eigen::Vector3d smoothstep(double x) {
  if (x <= 0.0) return Eigen::Vector3d::Zero();
  if (x >= 1.0) return Eigen::Vector3d(1.0, 0.0, 0.0);
  const double x2 = x * x, x3 = x2 * x;
  return {x3 * (10.0 - 15.0 * x + 6.0 * x2),
          30.0 * x2 * (1.0 - 2.0 * x + x2),
          60.0 * x * (1.0 - 3.0 * x + 2.0 * x2)};
}

inline Channel<3> circle(double R, double k, double pz, double t) {
  const double c = std::cos(k * t), s = std::sin(k * t);
  Channel<3> ch;
  ch.value = Vec3(R * c, R * s, pz);
  ch.d1 = Vec3(-R * k * s, R * k * c, 0.0);
  ch.d2 = Vec3(-R * k * k * c, -R * k * k * s, 0.0);
  return ch;
}

}  // namespace detail

inline ReferenceSample sample_trajectory(const TrajectorySpec& spec, double t) {
  ReferenceSample r;
  r.t = t;
  const double pz = -spec.altitude;
  switch (spec.kind) {
    case TrajectoryKind::kSetPoint:
      r.position.value = spec.setpoint;
      break;
    case TrajectoryKind::kCircle:
      r.position = detail::circle(spec.radius, spec.rate, pz, t);
      break;
    case TrajectoryKind::kPendulumCircle: {
      r.position.value = spec.setpoint;
      const double R = spec.radius, k = spec.rate;
      const double c = std::cos(k * t), s = std::sin(k * t);
      r.pendulum.value = Vec2(R * c, R * s);
      r.pendulum.d1 = Vec2(-R * k * s, R * k * c);
      r.pendulum.d2 = Vec2(-R * k * k * c, -R * k * k * s);
      break;
    }
    case TrajectoryKind::kTakeoffThenCircle: {
      // Climb from (R, 0, 0) to (R, 0, -altitude), then circle the origin.
      const double T = spec.transition_time;
      if (t < T) {
        const Eigen::Vector3d s = detail::smoothstep(t / T);
        r.position.value = Vec3(spec.radius, 0.0, pz * s[0]);
        r.position.d1 = Vec3(0.0, 0.0, pz * s[1] / T);
        r.position.d2 = Vec3(0.0, 0.0, pz * s[2] / (T * T));
        break;
      }
      const double tau = t - T;
      if (!spec.blend) {
        r.position = detail::circle(spec.radius, spec.rate, pz, tau);
        break;
      }
      // Phase advances with a rate that ramps from 0 to k over the blend
      // window, so velocity, acceleration and jerk stay continuous. After
      // the window the circle lags the raw one by k w / 2.
      const double w = spec.blend_window, k = spec.rate;
      double phase, phase_d1, phase_d2;
      if (tau >= w) {
        phase = k * (tau - 0.5 * w);
        phase_d1 = k;
        phase_d2 = 0.0;
      } else {
        const double x = tau / w;
        const Eigen::Vector3d s = detail::smoothstep(x);
        phase = k * w * x * x * x * x * (2.5 - 3.0 * x + x * x);
        phase_d1 = k * s[0];
        phase_d2 = k * s[1] / w;
      }
      const double R = spec.radius, c = std::cos(phase), sn = std::sin(phase);
      r.position.value = Vec3(R * c, R * sn, pz);
      r.position.d1 = Vec3(-R * sn * phase_d1, R * c * phase_d1, 0.0);
      r.position.d2 = Vec3(-R * c * phase_d1 * phase_d1 - R * sn * phase_d2,
                           -R * sn * phase_d1 * phase_d1 + R * c * phase_d2, 0.0);
      break;
    }
  }
  return r;
}

// Causal finite differences of a uniformly sampled set-point stream:
// backward second-order first derivative and three-point second derivative
// on a stencil whose points are `stride` samples apart. Until the stencil is
// full the output is flagged as startup: zeros on the first sample, then a
// first-order slope against the oldest sample held.
template <int N = 3>
class SetpointDifferentiator {
 public:
  using Vector = Eigen::Matrix<double, N, 1>;

  struct Output {
    Vector rate = Vector::Zero();
    Vector accel = Vector::Zero();
    bool startup = true;
  };

  explicit SetpointDifferentiator(double dt, int stride = 1)
      : dt_(dt), stride_(stride), history_(2 * static_cast<std::size_t>(stride) + 1) {
    if (!(dt > 0.0)) throw ValidationError("differentiator step must be > 0");
    if (stride < 1) throw ValidationError("differentiator stride must be >= 1");
  }

  Output push(const Vector& value) {
    head_ = (head_ + 1) % history_.size();
    history_[head_] = value;
    if (count_ < history_.size()) ++count_;
    Output out;
    if (count_ == 1) return out;
    if (count_ < history_.size()) {
      const std::size_t age = count_ - 1;
      out.rate = (value - at(age)) / (static_cast<double>(age) * dt_);
      return out;
    }
    const double h = stride_ * dt_;
    const Vector& x1 = at(static_cast<std::size_t>(stride_));
    const Vector& x2 = at(2 * static_cast<std::size_t>(stride_));
    out.rate = (3.0 * value - 4.0 * x1 + x2) / (2.0 * h);
    out.accel = (value - 2.0 * x1 + x2) / (h * h);
    out.startup = false;
    return out;
  }

  void reset() {
    count_ = 0;
    head_ = 0;
  }

  int stride() const { return stride_; }

 private:
  // Sample pushed `age` calls ago.
  const Vector& at(std::size_t age) const {
    return history_[(head_ + history_.size() - age) % history_.size()];
  }

  double dt_;
  int stride_;
  std::vector<Vector> history_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
};

}  // namespace quadpend::trajectories
