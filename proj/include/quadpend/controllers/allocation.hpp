#pragma once

// Force allocation: desired translational acceleration -> roll/pitch set-point
// at a fixed yaw, plus the thrust magnitude that realizes it.

#include <algorithm>
#include <cmath>

#include "quadpend/controllers/gains.hpp"
#include "quadpend/errors.hpp"
#include "quadpend/models.hpp"

namespace quadpend::controllers {

struct PositionReference {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 a = Vec3::Zero();
};

struct AttitudeSetpoint {
  Vec3 q_d = Vec3::Zero();
  Vec3 q_d_dot = Vec3::Zero();
  Vec3 q_d_ddot = Vec3::Zero();
  double thrust = 0.0;     // m ||f_d||
  Vec3 f_d = Vec3::Zero(); // g_1(q_d) f_z, i.e. acceleration minus gravity
};

// Angles whose thrust axis is parallel to f_d. The pitch uses a two-argument
// arctangent so that thrust points against f_d's vertical component in the
// Z-down frame.
inline AttitudeSetpoint attitude_from_force(const Vec3& f_d, double m,
                                            double psi_d = 0.0) {
  const double norm = f_d.norm();
  if (!(norm > 1e-6)) {
    throw AllocationError("thrust direction undefined: ||f_d|| = " +
                          std::to_string(norm));
  }
  const double sp = std::sin(psi_d), cp = std::cos(psi_d);
  const double ratio =
      std::clamp((-f_d.x() * sp + f_d.y() * cp) / norm, -1.0, 1.0);
  AttitudeSetpoint sp_out;
  sp_out.q_d.x() = std::asin(ratio);
  sp_out.q_d.y() = std::atan2(-(f_d.x() * cp + f_d.y() * sp), -f_d.z());
  sp_out.q_d.z() = psi_d;
  sp_out.thrust = m * norm;
  sp_out.f_d = f_d;
  return sp_out;
}

// Force demand for a desired acceleration a_d: f_d = a_d - g e_Z.
inline Vec3 force_from_acceleration(const Vec3& a_d, double g) {
  return a_d - Vec3(0.0, 0.0, g);
}

inline Vec3 allocation_force(const QuadState& s, const PositionReference& ref,
                             const ControllerGains& gains, double g) {
  const Vec3 a_d = ref.a + gains.kd.cwiseProduct(ref.v - s.v) +
                   gains.kp.cwiseProduct(ref.p - s.p);
  return force_from_acceleration(a_d, g);
}

inline AttitudeSetpoint position_allocation(const QuadState& s,
                                            const PositionReference& ref,
                                            const ControllerGains& gains,
                                            const VehicleParams& p) {
  return attitude_from_force(allocation_force(s, ref, gains, p.g), p.m, 0.0);
}

}  // namespace quadpend::controllers
