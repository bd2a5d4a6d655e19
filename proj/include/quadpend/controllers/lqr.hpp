#pragma once

// Combined pendulum + horizontal position regulation by LQR on the model
// linearized about hover with the pendulum upright:
//
//   a_ddot   = (3g/4L) a + (3/4) g theta
//   b_ddot   = (3g/4L) b - (3/4) g phi
//   pX_ddot  = -g theta
//   pY_ddot  =  g phi
//
// State eta_p = [a, b, pX, pY, a_dot, b_dot, pX_dot, pY_dot], input
// [phi_d, theta_d].

#include <algorithm>

#include "quadpend/controllers/allocation.hpp"
#include "quadpend/controllers/gains.hpp"
#include "quadpend/models.hpp"
#include "quadpend/numerics/care.hpp"

namespace quadpend::controllers {

struct LinearModel {
  Mat8 A = Mat8::Zero();
  Mat82 B = Mat82::Zero();
};

inline LinearModel pendulum_position_linear_model(double g, double L) {
  LinearModel m;
  m.A.topRightCorner<4, 4>().setIdentity();
  const double k = 3.0 * g / (4.0 * L);
  m.A(4, 0) = k;
  m.A(5, 1) = k;
  m.B(4, 1) = 0.75 * g;
  m.B(5, 0) = -0.75 * g;
  m.B(6, 1) = -g;
  m.B(7, 0) = g;
  return m;
}

// Nonlinear counterpart of the linear model: level yaw, thrust m g, attitude
// set directly by the input. Used to cross-check the linearization.
inline Vec8 pendulum_position_dynamics(const Vec8& x, const Vec2& angles,
                                       const VehicleParams& vp,
                                       const PendulumParams& pp) {
  const Vec3 q(angles[0], angles[1], 0.0);
  const Vec3 accel = quad_acceleration(q, vp.m * vp.g, vp);
  const PendulumState ps{x[0], x[1], x[4], x[5]};
  const Vec2 pend = pendulum_derivative(ps, world_to_pendulum_frame(accel), pp, vp.g);
  Vec8 dx;
  dx << x.segment<4>(4), pend, accel.head<2>();
  return dx;
}

inline Eigen::MatrixXd controllability_matrix(const LinearModel& m) {
  Eigen::MatrixXd C(8, 16);
  Eigen::MatrixXd AkB = m.B;
  for (int k = 0; k < 8; ++k) {
    C.middleCols(2 * k, 2) = AkB;
    AkB = m.A * AkB;
  }
  return C;
}

struct LqrDesign {
  LinearModel model;
  Mat8 P = Mat8::Zero();
  Mat28 K = Mat28::Zero();
};

inline LqrDesign design_pendulum_lqr(const ControllerGains& gains, double g,
                                     double L) {
  LqrDesign d;
  d.model = pendulum_position_linear_model(g, L);
  const numerics::CareProblem prob{d.model.A, d.model.B,
                                   Mat8(gains.q_lqr.asDiagonal()),
                                   Mat2(gains.r_lqr.asDiagonal())};
  d.P = numerics::solve_care(prob);
  d.K = numerics::care_gain(prob, d.P);
  return d;
}

inline Vec8 pendulum_position_state(const PendulumState& ps,
                                    const QuadState& s) {
  Vec8 eta;
  eta << ps.a, ps.b, s.p.x(), s.p.y(), ps.a_dot, ps.b_dot, s.v.x(), s.v.y();
  return eta;
}

// (phi_d, theta_d) = -K (eta_p - eta_ref), clamped; psi_d = 0.
inline AttitudeSetpoint pendulum_position_lqr(const PendulumState& ps,
                                              const QuadState& s,
                                              const Vec8& eta_ref,
                                              const Mat28& K,
                                              double angle_limit) {
  const Vec2 angles =
      (-K * (pendulum_position_state(ps, s) - eta_ref))
          .cwiseMax(-angle_limit)
          .cwiseMin(angle_limit);
  AttitudeSetpoint sp;
  sp.q_d = Vec3(angles[0], angles[1], 0.0);
  return sp;
}

}  // namespace quadpend::controllers
