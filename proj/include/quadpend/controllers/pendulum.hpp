#pragma once

// Feedback linearization of the pendulum offsets y_p = [a, b], treating the
// vehicle acceleration as the input. All vectors here live in the Z-up
// pendulum frame.

#include <cmath>
#include <string>

#include "quadpend/controllers/gains.hpp"
#include "quadpend/errors.hpp"
#include "quadpend/models.hpp"

namespace quadpend::controllers {

struct PendulumReference {
  Vec2 y = Vec2::Zero();
  Vec2 y_dot = Vec2::Zero();
  Vec2 y_ddot = Vec2::Zero();
};

// nu = y_ddot_d - K1 (y_dot - y_dot_d) - K2 (y - y_d)
inline Vec2 pendulum_virtual_input(const PendulumState& ps,
                                   const PendulumReference& ref,
                                   const ControllerGains& gains) {
  return ref.y_ddot - gains.k1.cwiseProduct(ps.rate() - ref.y_dot) -
         gains.k2.cwiseProduct(ps.offset() - ref.y);
}

// Minimum-norm acceleration xi with B_p xi = nu - f_p.
inline Vec3 pendulum_fbl_xi(const PendulumState& ps,
                            const PendulumReference& ref,
                            const PendulumParams& pp,
                            const ControllerGains& gains, double g) {
  const Mat23 Bp = pendulum_input_matrix(ps.a, ps.b, pp.L);
  const Vec2 rhs = pendulum_virtual_input(ps, ref, gains) -
                   pendulum_drift(ps, pp, g);
  // B_p^+ = B_p' (B_p B_p')^-1 for full row rank B_p.
  return Bp.transpose() * (Bp * Bp.transpose()).ldlt().solve(rhs);
}

// Left 2x2 block of B_p: the planar part of the input map.
inline Mat2 pendulum_planar_input_matrix(double a, double b, double L) {
  return pendulum_input_matrix(a, b, L).leftCols<2>();
}

// Planar acceleration xi' for a given vertical acceleration (Z-up).
inline Vec2 pendulum_fbl_xi_prime(const PendulumState& ps, double accel_z,
                                  const PendulumReference& ref,
                                  const PendulumParams& pp,
                                  const ControllerGains& gains, double g) {
  const Mat23 Bp = pendulum_input_matrix(ps.a, ps.b, pp.L);
  const Mat2 Bpp = Bp.leftCols<2>();
  const double det = Bpp.determinant();
  if (std::abs(det) < 1e-9) {
    throw DecouplingSingularityError("planar pendulum input matrix singular: det = " +
                                     std::to_string(det));
  }
  const Vec2 drift = pendulum_drift(ps, pp, g) + Bp.col(2) * accel_z;
  return Bpp.inverse() * (pendulum_virtual_input(ps, ref, gains) - drift);
}

}  // namespace quadpend::controllers
