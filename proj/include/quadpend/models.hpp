#pragma once

// Continuous-time dynamics: quadrotor rigid body, rotor mixer, and the
// inverted spherical pendulum riding on the vehicle.
//
// World frame is Z-down: gravity is (0, 0, +g) and thrust acts along the
// negative body z axis, so hover requires f_z = m g. The pendulum equations
// are written in a Z-up frame (zeta > 0 points up); use
// world_to_pendulum_frame() when feeding vehicle accelerations to them.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "quadpend/errors.hpp"

namespace quadpend {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Vec12 = Eigen::Matrix<double, 12, 1>;

inline constexpr double kHalfPi = 1.57079632679489661923;

struct QuadState {
  Vec3 p = Vec3::Zero();      // position (m)
  Vec3 v = Vec3::Zero();      // velocity (m/s)
  Vec3 q = Vec3::Zero();      // roll, pitch, yaw (rad)
  Vec3 omega = Vec3::Zero();  // body rates (rad/s)

  double roll() const { return q.x(); }
  double pitch() const { return q.y(); }
  double yaw() const { return q.z(); }

  Vec12 to_vector() const {
    Vec12 x;
    x << p, v, q, omega;
    return x;
  }

  static QuadState from_vector(const Vec12& x) {
    QuadState s;
    s.p = x.segment<3>(0);
    s.v = x.segment<3>(3);
    s.q = x.segment<3>(6);
    s.omega = x.segment<3>(9);
    return s;
  }

  bool finite() const { return to_vector().allFinite(); }
};

struct VehicleParams {
  double m = 1.0;
  Vec3 inertia = Vec3(0.01, 0.01, 0.02);  // principal moments (kg m^2)
  double rho = 1.225;
  double D = 0.2;
  double C_T = 0.1;
  double C_Q = 0.01;
  double l = 0.17;
  double g = 9.81;
  Vec4 u_min = Vec4::Zero();
  Vec4 u_max = Vec4::Constant(default_rotor_max(1.0, 9.81, 1.225, 0.2, 0.1));

  // Per-rotor bound that lets each rotor alone carry the full weight.
  static double default_rotor_max(double m, double g, double rho, double D,
                                  double C_T) {
    return 4.0 * m * g / (4.0 * rho * D * D * D * D * C_T);
  }

  double thrust_scale() const { return rho * D * D * D * D; }

  void validate() const {
    auto require = [](bool ok, const char* msg) {
      if (!ok) throw InvalidParamsError(msg);
    };
    require(m > 0, "vehicle mass must be positive");
    require((inertia.array() > 0).all(), "inertia values must be positive");
    require(C_T > 0, "thrust coefficient must be positive");
    require(l > 0, "arm length must be positive");
    require(D > 0, "rotor diameter must be positive");
    require(rho > 0, "air density must be positive");
    require(C_Q > 0, "torque coefficient must be positive");
    require(g > 0, "gravity must be positive");
    require((u_min.array() < u_max.array()).all(),
            "rotor bounds require u_min < u_max");
    require(u_min.allFinite() && u_max.allFinite(),
            "rotor bounds must be finite");
  }
};

struct PendulumState {
  double a = 0.0;
  double b = 0.0;
  double a_dot = 0.0;
  double b_dot = 0.0;

  Vec4 to_vector() const { return {a, b, a_dot, b_dot}; }
  static PendulumState from_vector(const Vec4& x) {
    return {x[0], x[1], x[2], x[3]};
  }
  Vec2 offset() const { return {a, b}; }
  Vec2 rate() const { return {a_dot, b_dot}; }
};

struct PendulumParams {
  double L = 0.5;    // half length; the rod is 2 L long
  double m_p = 0.05; // not used by the dynamics (no back-reaction)

  void validate() const {
    if (!(L > 0)) throw InvalidParamsError("pendulum half-length must be positive");
    if (!(m_p >= 0)) throw InvalidParamsError("pendulum mass must be non-negative");
  }
};

// g_1(q): maps body-z force to world acceleration.
inline Vec3 gravity_direction_map(const Vec3& q, double m) {
  const double sphi = std::sin(q.x()), cphi = std::cos(q.x());
  const double sth = std::sin(q.y()), cth = std::cos(q.y());
  const double spsi = std::sin(q.z()), cpsi = std::cos(q.z());
  return Vec3(sphi * spsi + cphi * sth * cpsi,
              -sphi * cpsi + cphi * sth * spsi,
              cphi * cth) *
         (-1.0 / m);
}

inline void require_regular_attitude(const Vec3& q) {
  if (!(std::abs(q.y()) < kHalfPi) || !std::isfinite(q.y())) {
    throw SingularAttitudeError("pitch " + std::to_string(q.y()) +
                                " rad is at or beyond +/- pi/2");
  }
}

// Z(q) with q_dot = Z(q) omega.
inline Mat3 euler_rate_matrix(const Vec3& q) {
  require_regular_attitude(q);
  const double sphi = std::sin(q.x()), cphi = std::cos(q.x());
  const double tth = std::tan(q.y()), secth = 1.0 / std::cos(q.y());
  Mat3 Z;
  Z << 1.0, sphi * tth, cphi * tth,
       0.0, cphi, -sphi,
       0.0, sphi * secth, cphi * secth;
  return Z;
}

inline Mat4 mixer_matrix(const VehicleParams& p) {
  const double ct = p.C_T, cq = p.C_Q, ctl = p.C_T * p.l;
  Mat4 B;
  B << ct, ct, ct, ct,
       0.0, ctl, 0.0, -ctl,
       ctl, 0.0, -ctl, 0.0,
       cq, -cq, cq, -cq;
  return p.thrust_scale() * B;
}

// [f_z, tau_x, tau_y, tau_z] = B u
inline Vec4 mixer_forward(const Vec4& u, const VehicleParams& p) {
  return mixer_matrix(p) * u;
}

// No clamping; the caller decides what to do with out-of-range commands.
inline Vec4 mixer_inverse(const Vec4& wrench, const VehicleParams& p) {
  const Mat4 B = mixer_matrix(p);
  const Eigen::PartialPivLU<Mat4> lu(B);
  Vec4 u = lu.solve(wrench);
  u += lu.solve(wrench - B * u);  // one refinement step
  return u;
}

// Rotor commands and the equivalent body wrench. Built from either side;
// the other is always derived through the mixer.
class ControlCommand {
 public:
  ControlCommand() = default;

  static ControlCommand from_rotor_commands(const Vec4& u,
                                            const VehicleParams& p) {
    return ControlCommand(u, mixer_forward(u, p));
  }
  static ControlCommand from_wrench(const Vec4& wrench,
                                    const VehicleParams& p) {
    const Vec4 u = mixer_inverse(wrench, p);
    return ControlCommand(u, mixer_forward(u, p));
  }

  const Vec4& u() const { return u_; }
  const Vec4& wrench() const { return wrench_; }
  double thrust() const { return wrench_[0]; }
  Vec3 torque() const { return wrench_.tail<3>(); }

 private:
  ControlCommand(const Vec4& u, const Vec4& w) : u_(u), wrench_(w) {}
  Vec4 u_ = Vec4::Zero();
  Vec4 wrench_ = Vec4::Zero();
};

// Translational acceleration p_ddot = g e_Z + g_1(q) f_z.
inline Vec3 quad_acceleration(const Vec3& q, double f_z,
                              const VehicleParams& p) {
  return Vec3(0.0, 0.0, p.g) + gravity_direction_map(q, p.m) * f_z;
}

inline Vec3 rigid_body_angular_acceleration(const Vec3& omega,
                                            const Vec3& tau,
                                            const VehicleParams& p) {
  const Vec3 Iw = p.inertia.cwiseProduct(omega);
  return (Iw.cross(omega) + tau).cwiseQuotient(p.inertia);
}

inline Vec12 quad_derivative(const QuadState& s, const ControlCommand& c,
                             const VehicleParams& p) {
  Vec12 dx;
  dx.segment<3>(0) = s.v;
  dx.segment<3>(3) = quad_acceleration(s.q, c.thrust(), p);
  dx.segment<3>(6) = euler_rate_matrix(s.q) * s.omega;
  dx.segment<3>(9) = rigid_body_angular_acceleration(s.omega, c.torque(), p);
  return dx;
}

// Flip the vertical axis: Z-down world <-> Z-up pendulum frame.
inline Vec3 world_to_pendulum_frame(const Vec3& world) {
  return {world.x(), world.y(), -world.z()};
}
inline Vec3 pendulum_to_world_frame(const Vec3& pend) {
  return world_to_pendulum_frame(pend);
}

inline double pendulum_zeta(double a, double b, double L) {
  const double r2 = a * a + b * b;
  if (!(r2 < L * L)) {
    throw PendulumDegenerateError("pendulum horizontal: a^2 + b^2 = " +
                                  std::to_string(r2) + " >= L^2 = " +
                                  std::to_string(L * L));
  }
  return std::sqrt(L * L - r2);
}

// B_p(a, b, L), the 2x3 map from vehicle acceleration to (a_ddot, b_ddot).
inline Mat23 pendulum_input_matrix(double a, double b, double L) {
  const double zeta = pendulum_zeta(a, b, L);
  const double s = 3.0 / (4.0 * L * L);
  Mat23 Bp;
  Bp << s * (a * a - L * L), s * a * b, s * a * zeta,
        s * a * b, s * (b * b - L * L), s * b * zeta;
  return Bp;
}

// f_p(a, b, L, a_dot, b_dot, zeta).
inline Vec2 pendulum_drift(const PendulumState& ps, const PendulumParams& pp,
                           double g) {
  const double L = pp.L;
  const double a = ps.a, b = ps.b, ad = ps.a_dot, bd = ps.b_dot;
  const double zeta = pendulum_zeta(a, b, L);
  const double H = 4.0 * bd * bd * (a * a - L * L) - 8.0 * ad * bd * a * b +
                   4.0 * ad * ad * (b * b - L * L) +
                   3.0 * zeta * zeta * zeta * g;
  const double den = 4.0 * L * L * zeta * zeta;
  return Vec2(a * H / den, b * H / den);
}

// (a_ddot, b_ddot); accel is the vehicle acceleration in the Z-up frame.
inline Vec2 pendulum_derivative(const PendulumState& ps, const Vec3& accel,
                                const PendulumParams& pp, double g) {
  return pendulum_drift(ps, pp, g) +
         pendulum_input_matrix(ps.a, ps.b, pp.L) * accel;
}

}  // namespace quadpend
