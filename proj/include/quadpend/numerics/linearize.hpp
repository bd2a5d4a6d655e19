#pragma once

#include <string>
#include <utility>

#include <Eigen/Dense>

#include "quadpend/errors.hpp"

namespace quadpend::numerics {

struct Jacobians {
  Eigen::MatrixXd A;  // df/dx
  Eigen::MatrixXd B;  // df/du
};

// Central finite-difference Jacobians of f(x, u) at (x0, u0).
template <typename Dynamics>
Jacobians linearize(Dynamics&& f, const Eigen::VectorXd& x0,
                    const Eigen::VectorXd& u0, double eps = 1e-5) {
  const Eigen::VectorXd f0 = f(x0, u0);
  const Eigen::Index n = x0.size(), m = u0.size(), r = f0.size();
  Jacobians J{Eigen::MatrixXd(r, n), Eigen::MatrixXd(r, m)};

  auto sample = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                    const char* wrt, Eigen::Index j) {
    Eigen::VectorXd y = f(x, u);
    if (!y.allFinite()) {
      throw NonFiniteError(std::string("non-finite sample while differentiating with respect to ") +
                               wrt + "[" + std::to_string(j) + "]",
                           0.0);
    }
    return y;
  };

  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd xp = x0, xm = x0;
    xp[j] += eps;
    xm[j] -= eps;
    J.A.col(j) = (sample(xp, u0, "x", j) - sample(xm, u0, "x", j)) / (2 * eps);
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::VectorXd up = u0, um = u0;
    up[j] += eps;
    um[j] -= eps;
    J.B.col(j) = (sample(x0, up, "u", j) - sample(x0, um, "u", j)) / (2 * eps);
  }
  return J;
}

}  // namespace quadpend::numerics
