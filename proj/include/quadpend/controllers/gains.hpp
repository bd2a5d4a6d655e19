#pragma once

#include <Eigen/Dense>

#include "quadpend/models.hpp"

namespace quadpend::controllers {

using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using Mat84 = Eigen::Matrix<double, 8, 4>;
using Mat82 = Eigen::Matrix<double, 8, 2>;
using Mat28 = Eigen::Matrix<double, 2, 8>;

// User-tunable gains. Diagonal weights are stored as vectors.
struct ControllerGains {
  Vec4 alpha1 = Vec4::Constant(100.0);  // output tracking, position term
  Vec4 alpha2 = Vec4::Constant(20.0);   // output tracking, rate term
  Vec3 kp = Vec3::Constant(4.0);        // position allocation
  Vec3 kd = Vec3::Constant(4.0);
  Vec8 q_care = Vec8::Ones();           // CARE weight on eta
  Vec2 k1 = Vec2::Constant(8.0);        // pendulum rate gain
  Vec2 k2 = Vec2::Constant(16.0);       // pendulum offset gain
  Vec8 q_lqr = (Vec8() << 10, 10, 1, 1, 1, 1, 1, 1).finished();
  Vec2 r_lqr = Vec2::Constant(100.0);
  double lqr_angle_limit = 0.5;         // rad, on phi_d and theta_d
  double clf_slack_weight = 1e3;        // L1 penalty when the CLF row is relaxed
};

// Output dynamics eta_dot = F eta + G v for four decoupled double integrators.
inline Mat8 output_dynamics_F() {
  Mat8 F = Mat8::Zero();
  F.topRightCorner<4, 4>().setIdentity();
  return F;
}

inline Mat84 output_dynamics_G() {
  Mat84 G = Mat84::Zero();
  G.bottomRows<4>().setIdentity();
  return G;
}

}  // namespace quadpend::controllers
