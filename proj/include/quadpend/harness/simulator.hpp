#pragma once

// Fixed-step closed-loop simulation of a scenario.
//
// Each step: sample the reference, run the outer loop (position allocation,
// pendulum controller or LQR), differentiate the attitude set-point, run the
// inner attitude/altitude controller, clamp rotor commands, draw process
// noise, then advance vehicle and pendulum together with RK4. The pendulum
// is driven by the vehicle's instantaneous acceleration inside every RK4
// stage, so it sees the realized (clamped, noisy) acceleration.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "quadpend/controllers/allocation.hpp"
#include "quadpend/controllers/clf_qp.hpp"
#include "quadpend/controllers/fbl.hpp"
#include "quadpend/controllers/lqr.hpp"
#include "quadpend/controllers/pendulum.hpp"
#include "quadpend/harness/scenario.hpp"
#include "quadpend/numerics/integrator.hpp"
#include "quadpend/trajectories.hpp"

namespace quadpend::harness {

struct StepRecord {
  double t = 0.0;
  QuadState quad;
  std::optional<PendulumState> pendulum;
  ControlCommand command;        // applied (after clamping)
  Vec4 u_raw = Vec4::Zero();     // controller output before clamping
  controllers::AttitudeSetpoint setpoint;
  Vec3 commanded_accel = Vec3::Zero();  // desired vehicle acceleration (world)
  Vec3 position_ref = Vec3::Zero();
  std::optional<Vec2> pendulum_ref;
  bool clamped = false;
  bool relaxed = false;
  bool fault = false;
  bool startup = false;  // set-point derivatives not yet available
  double clf_V = std::numeric_limits<double>::quiet_NaN();
  double clf_V_dot = std::numeric_limits<double>::quiet_NaN();
};

struct Event {
  double t = 0.0;
  std::string kind;  // clamp | qp-relaxed | fault
  std::string detail;
};

struct SimLog {
  std::string scenario;
  double dt = 0.0;
  bool has_pendulum = false;
  double clf_c3 = std::numeric_limits<double>::quiet_NaN();
  std::vector<StepRecord> records;
  std::vector<Event> events;
  bool aborted = false;
  double abort_time = std::numeric_limits<double>::quiet_NaN();
  std::string abort_reason;
};

namespace detail {

using Vec16 = Eigen::Matrix<double, 16, 1>;

struct Designs {
  controllers::ClfDesign clf;
  std::optional<controllers::LqrDesign> lqr;
};

inline Designs design_all(const Scenario& sc) {
  Designs d;
  d.clf = controllers::design_clf(sc.gains);
  if (sc.controller == ControllerKind::kPendLqr) {
    d.lqr = controllers::design_pendulum_lqr(sc.gains, sc.vehicle.g,
                                             sc.pendulum.L);
  }
  return d;
}

struct ControlOutput {
  Vec4 u_raw = Vec4::Zero();
  controllers::AttitudeSetpoint setpoint;
  Vec3 commanded_accel = Vec3::Zero();
  bool startup = false;
  bool relaxed = false;
  double clf_V = std::numeric_limits<double>::quiet_NaN();
  double clf_V_dot = std::numeric_limits<double>::quiet_NaN();
};

inline controllers::PositionReference position_ref(
    const trajectories::ReferenceSample& r) {
  return {r.position.value, r.position.d1, r.position.d2};
}

}  // namespace detail

struct CoupledState {
  QuadState quad;
  PendulumState pend;
};

// Held over one step.
struct ProcessNoise {
  Vec3 accel = Vec3::Zero();
  Vec3 angular = Vec3::Zero();
};

// One RK4 step of the vehicle and, when pp is given, the pendulum driven by
// the vehicle's realized acceleration at each stage.
inline CoupledState coupled_step(const CoupledState& x0, const ControlCommand& cmd,
                                 const VehicleParams& vp, const PendulumParams* pp,
                                 const ProcessNoise& w, double t, double dt) {
  detail::Vec16 x;
  x << x0.quad.to_vector(), x0.pend.to_vector();
  auto deriv = [&](double, const detail::Vec16& xs) {
    const QuadState qs = QuadState::from_vector(xs.head<12>());
    detail::Vec16 dx = detail::Vec16::Zero();
    Vec12 dq = quad_derivative(qs, cmd, vp);
    dq.segment<3>(3) += w.accel;
    dq.segment<3>(9) += w.angular;
    dx.head<12>() = dq;
    if (pp) {
      const PendulumState ps = PendulumState::from_vector(xs.tail<4>());
      dx.segment<2>(12) = ps.rate();
      dx.segment<2>(14) = pendulum_derivative(
          ps, world_to_pendulum_frame(dq.segment<3>(3)), *pp, vp.g);
    }
    return dx;
  };
  x = numerics::rk4_step(deriv, t, x, dt);
  return {QuadState::from_vector(x.head<12>()),
          PendulumState::from_vector(x.tail<4>())};
}

class Simulator {
 public:
  explicit Simulator(Scenario sc)
      : sc_(std::move(sc)),
        designs_((sc_.validate(), detail::design_all(sc_))),
        diff_(sc_.dt, sc_.diff_stride()) {}

  const Scenario& scenario() const { return sc_; }
  const controllers::ClfDesign& clf_design() const { return designs_.clf; }
  const std::optional<controllers::LqrDesign>& lqr_design() const {
    return designs_.lqr;
  }

  SimLog run() {
    using controllers::AttitudeSetpoint;
    SimLog log;
    log.scenario = sc_.name;
    log.dt = sc_.dt;
    log.has_pendulum = sc_.has_pendulum;
    log.clf_c3 = designs_.clf.c3;

    const std::size_t steps = sc_.step_count();
    log.records.reserve(steps + 1);
    diff_.reset();

    QuadState quad = sc_.initial_quad;
    PendulumState pend = sc_.initial_pendulum;
    const VehicleParams& vp = sc_.vehicle;
    ControlCommand held = ControlCommand::from_wrench(
        Vec4(vp.m * vp.g, 0.0, 0.0, 0.0), vp);
    int consecutive_faults = 0;

    std::mt19937_64 rng(sc_.noise.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double noise_scale = std::sqrt(kNoiseReferenceDt / sc_.dt);

    for (std::size_t k = 0; k <= steps; ++k) {
      const double t = static_cast<double>(k) * sc_.dt;
      const trajectories::ReferenceSample ref =
          trajectories::sample_trajectory(sc_.trajectory, t);

      StepRecord rec;
      rec.t = t;
      rec.quad = quad;
      if (sc_.has_pendulum) rec.pendulum = pend;
      rec.position_ref = ref.position.value;
      if (sc_.has_pendulum) rec.pendulum_ref = ref.pendulum.value;

      ControlCommand cmd;
      try {
        const detail::ControlOutput out = control(quad, pend, ref);
        rec.u_raw = out.u_raw;
        rec.setpoint = out.setpoint;
        rec.commanded_accel = out.commanded_accel;
        rec.startup = out.startup;
        rec.relaxed = out.relaxed;
        rec.clf_V = out.clf_V;
        rec.clf_V_dot = out.clf_V_dot;
        const Vec4 u = out.u_raw.cwiseMax(vp.u_min).cwiseMin(vp.u_max);
        rec.clamped = (u - out.u_raw).cwiseAbs().maxCoeff() > 0.0;
        cmd = ControlCommand::from_rotor_commands(u, vp);
        held = cmd;
        consecutive_faults = 0;
        if (rec.clamped) {
          log.events.push_back({t, "clamp", "rotor command clamped to bounds"});
        }
        if (rec.relaxed) {
          log.events.push_back({t, "qp-relaxed", "CLF decrease row relaxed"});
        }
      } catch (const QpError& e) {
        rec.fault = true;
        rec.u_raw = held.u();
        cmd = held;
        log.events.push_back({t, "fault", e.what()});
        if (++consecutive_faults >= sc_.max_consecutive_faults) {
          rec.command = cmd;
          log.records.push_back(rec);
          abort(log, t, "too many consecutive controller faults: " +
                            std::string(e.what()));
          return log;
        }
      } catch (const Error& e) {
        rec.command = held;
        log.records.push_back(rec);
        abort(log, t, e.what());
        return log;
      }
      rec.command = cmd;
      log.records.push_back(rec);
      if (k == steps) break;

      Vec3 accel_noise = Vec3::Zero(), angular_noise = Vec3::Zero();
      if (sc_.noise.enabled) {
        for (int i = 0; i < 3; ++i) {
          accel_noise[i] = sc_.noise.accel_std[i] * noise_scale * normal(rng);
        }
        for (int i = 0; i < 3; ++i) {
          angular_noise[i] = sc_.noise.angular_std[i] * noise_scale * normal(rng);
        }
      }

      try {
        const CoupledState next = coupled_step(
            {quad, pend}, cmd, vp,
            sc_.has_pendulum ? &sc_.pendulum : nullptr,
            {accel_noise, angular_noise}, t, sc_.dt);
        quad = next.quad;
        pend = next.pend;
        const bool with_pend = sc_.has_pendulum;
        const PendulumParams& pp = sc_.pendulum;
        require_regular_attitude(quad.q);
        if (!quad.finite()) {
          throw NonFiniteError("vehicle state became non-finite", t + sc_.dt);
        }
        if (with_pend) {
          const double r2 = pend.a * pend.a + pend.b * pend.b;
          const double lim = sc_.pendulum_margin * pp.L;
          if (!(r2 <= lim * lim)) {
            throw PendulumDegenerateError(
                "pendulum offset exceeded the degeneracy margin");
          }
        }
      } catch (const Error& e) {
        abort(log, t + sc_.dt, e.what());
        return log;
      }
    }
    return log;
  }

 private:
  void abort(SimLog& log, double t, const std::string& reason) const {
    log.aborted = true;
    log.abort_time = t;
    log.abort_reason = reason;
  }

  // Attitude set-point plus altitude channel -> inner-loop command.
  detail::ControlOutput inner(const QuadState& quad,
                              controllers::AttitudeSetpoint sp,
                              double z, double z_dot, double z_ddot,
                              detail::ControlOutput out) {
    const auto d = diff_.push(sp.q_d);
    sp.q_d_dot = d.rate;
    sp.q_d_ddot = d.accel;
    out.startup = d.startup;

    controllers::OutputReference oref;
    oref.y << z, sp.q_d;
    oref.y_dot << z_dot, sp.q_d_dot;
    oref.y_ddot << z_ddot, sp.q_d_ddot;

    const bool use_clf =
        sc_.controller == ControllerKind::kClfQp ||
        (is_pendulum_controller(sc_.controller) && sc_.inner == InnerLoop::kClfQp);
    if (use_clf) {
      const auto r = controllers::clf_qp_controller(quad, oref, designs_.clf,
                                                    sc_.gains, sc_.vehicle);
      out.u_raw = r.command.u();
      out.relaxed = r.report.relaxed;
      out.clf_V = r.report.V;
      out.clf_V_dot = r.report.V_dot;
    } else {
      out.u_raw = controllers::fbl_tracker(quad, oref, sc_.gains, sc_.vehicle).u();
    }
    out.setpoint = sp;
    return out;
  }

  detail::ControlOutput control(const QuadState& quad,
                                const PendulumState& pend,
                                const trajectories::ReferenceSample& ref) {
    using namespace controllers;
    const VehicleParams& vp = sc_.vehicle;
    const ControllerGains& gains = sc_.gains;
    detail::ControlOutput out;

    switch (sc_.controller) {
      case ControllerKind::kFblRegulator: {
        const Vec4 y_d(ref.position.value.z(), 0.0, 0.0, 0.0);
        out.u_raw = fbl_regulator(quad, y_d, designs_.clf.P, vp).u();
        out.commanded_accel = Vec3(0.0, 0.0, 0.0);
        return out;
      }
      case ControllerKind::kFblTracker:
      case ControllerKind::kClfQp: {
        const PositionReference pref = detail::position_ref(ref);
        AttitudeSetpoint sp = position_allocation(quad, pref, gains, vp);
        out.commanded_accel = sp.f_d + Vec3(0.0, 0.0, vp.g);
        return inner(quad, sp, pref.p.z(), pref.v.z(), pref.a.z(), out);
      }
      case ControllerKind::kPendXi: {
        const PendulumReference pr{ref.pendulum.value, ref.pendulum.d1,
                                   ref.pendulum.d2};
        const Vec3 xi = pendulum_to_world_frame(
            pendulum_fbl_xi(pend, pr, sc_.pendulum, gains, vp.g));
        AttitudeSetpoint sp =
            attitude_from_force(force_from_acceleration(xi, vp.g), vp.m);
        out.commanded_accel = xi;
        // Altitude channel realizes xi_Z directly; no position feedback.
        return inner(quad, sp, quad.p.z(), quad.v.z(), xi.z(), out);
      }
      case ControllerKind::kPendXiPrime: {
        const PendulumReference pr{ref.pendulum.value, ref.pendulum.d1,
                                   ref.pendulum.d2};
        // Vertical acceleration commanded by the altitude loop this step.
        const double z_acc = ref.position.d2.z() -
                             gains.alpha2[0] * (quad.v.z() - ref.position.d1.z()) -
                             gains.alpha1[0] * (quad.p.z() - ref.position.value.z());
        const Vec2 xi = pendulum_fbl_xi_prime(pend, -z_acc, pr, sc_.pendulum,
                                              gains, vp.g);
        const Vec3 a_d(xi.x(), xi.y(), z_acc);
        AttitudeSetpoint sp =
            attitude_from_force(force_from_acceleration(a_d, vp.g), vp.m);
        out.commanded_accel = a_d;
        return inner(quad, sp, ref.position.value.z(), ref.position.d1.z(),
                     ref.position.d2.z(), out);
      }
      case ControllerKind::kPendLqr: {
        Vec8 eta_ref;
        eta_ref << ref.pendulum.value, ref.position.value.head<2>(),
            ref.pendulum.d1, ref.position.d1.head<2>();
        AttitudeSetpoint sp = pendulum_position_lqr(
            pend, quad, eta_ref, designs_.lqr->K, gains.lqr_angle_limit);
        out.commanded_accel =
            Vec3(-vp.g * sp.q_d.y(), vp.g * sp.q_d.x(), ref.position.d2.z());
        return inner(quad, sp, ref.position.value.z(), ref.position.d1.z(),
                     ref.position.d2.z(), out);
      }
    }
    return out;
  }

  Scenario sc_;
  detail::Designs designs_;
  trajectories::SetpointDifferentiator<3> diff_;
};

inline SimLog run_scenario(const Scenario& sc) { return Simulator(sc).run(); }

}  // namespace quadpend::harness
