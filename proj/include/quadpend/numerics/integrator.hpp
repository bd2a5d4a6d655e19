#pragma once

#include <string>

#include <Eigen/Dense>

#include "quadpend/errors.hpp"

namespace quadpend::numerics {

enum class StepMethod { kRk4, kEuler };

struct StepperConfig {
  double dt = 1e-3;
  StepMethod method = StepMethod::kRk4;
};

namespace detail {

template <typename Vector>
void check_stage(const Vector& k, double t, const char* stage) {
  if (!k.allFinite()) {
    throw NonFiniteError(std::string("non-finite derivative in ") + stage +
                             " stage at t = " + std::to_string(t),
                         t);
  }
}

}  // namespace detail

// Classical fourth-order Runge-Kutta step of x' = deriv(t, x).
template <typename Deriv, typename Vector>
Vector rk4_step(Deriv&& deriv, double t, const Vector& x, double dt) {
  const Vector k1 = deriv(t, x);
  detail::check_stage(k1, t, "first");
  const Vector k2 = deriv(t + 0.5 * dt, Vector(x + 0.5 * dt * k1));
  detail::check_stage(k2, t + 0.5 * dt, "second");
  const Vector k3 = deriv(t + 0.5 * dt, Vector(x + 0.5 * dt * k2));
  detail::check_stage(k3, t + 0.5 * dt, "third");
  const Vector k4 = deriv(t + dt, Vector(x + dt * k3));
  detail::check_stage(k4, t + dt, "fourth");
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <typename Deriv, typename Vector>
Vector euler_step(Deriv&& deriv, double t, const Vector& x, double dt) {
  const Vector k1 = deriv(t, x);
  detail::check_stage(k1, t, "euler");
  return x + dt * k1;
}

template <typename Deriv, typename Vector>
Vector step(const StepperConfig& cfg, Deriv&& deriv, double t,
            const Vector& x) {
  switch (cfg.method) {
    case StepMethod::kEuler:
      return euler_step(deriv, t, x, cfg.dt);
    case StepMethod::kRk4:
      break;
  }
  return rk4_step(deriv, t, x, cfg.dt);
}

}  // namespace quadpend::numerics
