#pragma once

// Input-output feedback linearization of y = [p_Z, phi, theta, psi].
//
//   y_ddot = Lf_h(x) + A(x) B u
//
// with vector relative degree [2, 2, 2, 2].

#include <cmath>

#include <Eigen/Dense>

#include "quadpend/controllers/gains.hpp"
#include "quadpend/errors.hpp"
#include "quadpend/models.hpp"

namespace quadpend::controllers {

inline constexpr double kDecouplingMargin = 1e-6;

struct FblTerms {
  Vec4 lf_h = Vec4::Zero();
  Mat4 A_x = Mat4::Zero();
};

struct OutputReference {
  Vec4 y = Vec4::Zero();
  Vec4 y_dot = Vec4::Zero();
  Vec4 y_ddot = Vec4::Zero();
};

inline Vec4 output(const QuadState& s) {
  return {s.p.z(), s.q.x(), s.q.y(), s.q.z()};
}

inline Vec4 output_rate(const QuadState& s) {
  Vec4 yd;
  yd << s.v.z(), euler_rate_matrix(s.q) * s.omega;
  return yd;
}

// d(Z(q) w)/dq evaluated at fixed w.
inline Mat3 euler_rate_jacobian(const Vec3& q, const Vec3& w) {
  const double sphi = std::sin(q.x()), cphi = std::cos(q.x());
  const double tth = std::tan(q.y()), secth = 1.0 / std::cos(q.y());
  const double mix = sphi * w.y() + cphi * w.z();      // appears in theta partials
  const double dmix = cphi * w.y() - sphi * w.z();     // d(mix)/dphi
  Mat3 J;
  J << dmix * tth, mix * secth * secth, 0.0,
       -sphi * w.y() - cphi * w.z(), 0.0, 0.0,
       dmix * secth, mix * secth * tth, 0.0;
  return J;
}

inline FblTerms fbl_terms(const QuadState& s, const VehicleParams& p) {
  const double cc = std::cos(s.q.x()) * std::cos(s.q.y());
  if (std::abs(cc) < kDecouplingMargin) {
    throw DecouplingSingularityError(
        "decoupling matrix singular: cos(phi) cos(theta) = " +
        std::to_string(cc));
  }
  const Mat3 Z = euler_rate_matrix(s.q);
  const Vec3 qdot = Z * s.omega;
  const Vec3 Iw = p.inertia.cwiseProduct(s.omega);

  FblTerms t;
  t.lf_h[0] = p.g;
  t.lf_h.tail<3>() = euler_rate_jacobian(s.q, s.omega) * qdot +
                     Z * Iw.cross(s.omega).cwiseQuotient(p.inertia);
  t.A_x(0, 0) = -cc / p.m;
  t.A_x.bottomRightCorner<3, 3>() = Z * p.inertia.cwiseInverse().asDiagonal();
  return t;
}

// A(x) B, the map from rotor commands to output accelerations.
inline Mat4 decoupling_matrix(const FblTerms& t, const VehicleParams& p) {
  return t.A_x * mixer_matrix(p);
}

// y_ddot produced by command u at state s.
inline Vec4 output_acceleration(const QuadState& s, const Vec4& u,
                                const VehicleParams& p) {
  const FblTerms t = fbl_terms(s, p);
  return t.lf_h + decoupling_matrix(t, p) * u;
}

// u = (A(x) B)^-1 (v - Lf_h): realizes y_ddot = v exactly.
inline ControlCommand fbl_command(const FblTerms& t, const Vec4& v,
                                  const VehicleParams& p) {
  const Vec4 u = decoupling_matrix(t, p).partialPivLu().solve(v - t.lf_h);
  return ControlCommand::from_rotor_commands(u, p);
}

inline Vec8 output_error(const QuadState& s, const OutputReference& ref) {
  Vec8 eta;
  eta << output(s) - ref.y, output_rate(s) - ref.y_dot;
  return eta;
}

// Set-point regulation with v = -G' P eta.
inline ControlCommand fbl_regulator(const QuadState& s, const Vec4& y_d,
                                    const Mat8& P_care,
                                    const VehicleParams& p) {
  Vec8 eta;
  eta << output(s) - y_d, output_rate(s);
  const Vec4 v = -output_dynamics_G().transpose() * P_care * eta;
  return fbl_command(fbl_terms(s, p), v, p);
}

// Output-space virtual input of the tracking law.
inline Vec4 tracking_virtual_input(const QuadState& s,
                                   const OutputReference& ref,
                                   const ControllerGains& gains) {
  const Vec4 e = output(s) - ref.y;
  const Vec4 e_dot = output_rate(s) - ref.y_dot;
  return ref.y_ddot - gains.alpha2.cwiseProduct(e_dot) -
         gains.alpha1.cwiseProduct(e);
}

inline ControlCommand fbl_tracker(const QuadState& s,
                                  const OutputReference& ref,
                                  const ControllerGains& gains,
                                  const VehicleParams& p) {
  return fbl_command(fbl_terms(s, p), tracking_virtual_input(s, ref, gains),
                     p);
}

}  // namespace quadpend::controllers
