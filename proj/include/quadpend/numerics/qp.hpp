#pragma once

// Dense convex QP
//
//   minimize    1/2 x' H x + f' x
//   subject to  A x <= b
//
// by a primal active-set method. H may be positive semidefinite: directions
// of zero curvature are followed as rays until a constraint blocks them.
// A feasible starting point comes from a phase-one LP solved by the same
// routine.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "quadpend/errors.hpp"

namespace quadpend::numerics {

struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  Eigen::MatrixXd A;  // k x n, may have zero rows
  Eigen::VectorXd b;
};

struct QpOptions {
  int max_iterations = 0;  // 0 selects 50 (n + k) + 50
  std::optional<Eigen::VectorXd> initial_point;
};

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;  // one per row of A, zero when inactive
  std::vector<int> active_set;
  int iterations = 0;
  double objective = 0.0;
};

inline double qp_objective(const QpProblem& prob, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(prob.H * x) + prob.f.dot(x);
}

inline double max_violation(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& x) {
  if (A.rows() == 0) return 0.0;
  return std::max(0.0, (A * x - b).maxCoeff());
}

namespace detail {

struct ActiveSetResult {
  Eigen::VectorXd x;
  std::vector<int> working;
  Eigen::VectorXd lambda;  // aligned with working
  int iterations = 0;
};

// Runs from a feasible x. Throws QpUnboundedError when a zero-curvature
// descent ray is never blocked.
inline ActiveSetResult active_set(const Eigen::MatrixXd& H,
                                  const Eigen::VectorXd& f,
                                  const Eigen::MatrixXd& A,
                                  const Eigen::VectorXd& b, Eigen::VectorXd x,
                                  int max_iterations) {
  const Eigen::Index n = x.size();
  const Eigen::Index k = A.rows();
  const double h_scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  const double curvature_tol = 1e-11 * h_scale;

  std::vector<int> working;
  std::vector<char> in_working(static_cast<size_t>(k), 0);
  ActiveSetResult out;

  for (int iter = 0; iter < max_iterations; ++iter) {
    out.iterations = iter + 1;
    const Eigen::VectorXd g = H * x + f;
    const double g_scale = std::max({1.0, g.norm(), f.norm()});
    const Eigen::Index w = static_cast<Eigen::Index>(working.size());

    Eigen::MatrixXd Aw(w, n);
    for (Eigen::Index i = 0; i < w; ++i) Aw.row(i) = A.row(working[i]);

    Eigen::MatrixXd Z;
    if (w == 0) {
      Z = Eigen::MatrixXd::Identity(n, n);
    } else {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(Aw.transpose());
      const Eigen::MatrixXd Qfull = qr.householderQ();
      Z = Qfull.rightCols(n - w);
    }

    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    bool ray = false;
    if (Z.cols() > 0) {
      const Eigen::MatrixXd Hz = Z.transpose() * H * Z;
      const Eigen::VectorXd gz = Z.transpose() * g;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hz);
      const Eigen::VectorXd lam = es.eigenvalues();
      const Eigen::MatrixXd V = es.eigenvectors();
      const Eigen::VectorXd c = V.transpose() * gz;
      Eigen::VectorXd flat = Eigen::VectorXd::Zero(c.size());
      Eigen::VectorXd curved = Eigen::VectorXd::Zero(c.size());
      for (Eigen::Index i = 0; i < c.size(); ++i) {
        if (lam[i] <= curvature_tol) {
          flat[i] = -c[i];
        } else {
          curved[i] = -c[i] / lam[i];
        }
      }
      if (flat.norm() > 1e-12 * g_scale) {
        ray = true;
        p = Z * (V * flat);
      } else {
        p = Z * (V * curved);
      }
    }

    const double x_scale = std::max(1.0, x.norm());
    if (!ray && p.norm() <= 1e-13 * x_scale) {
      // Stationary on the working set: inspect multipliers.
      Eigen::VectorXd lambda(w);
      if (w > 0) {
        lambda = Aw.transpose().colPivHouseholderQr().solve(-g);
      }
      Eigen::Index worst = -1;
      double worst_value = -1e-10 * g_scale;
      for (Eigen::Index i = 0; i < w; ++i) {
        if (lambda[i] < worst_value) {
          worst_value = lambda[i];
          worst = i;
        }
      }
      if (worst < 0) {
        out.x = x;
        out.working = working;
        out.lambda = lambda.cwiseMax(0.0);
        return out;
      }
      in_working[static_cast<size_t>(working[worst])] = 0;
      working.erase(working.begin() + worst);
      continue;
    }

    // Ratio test.
    double alpha = ray ? std::numeric_limits<double>::infinity() : 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (in_working[static_cast<size_t>(i)]) continue;
      const double ap = A.row(i).dot(p);
      if (ap <= 1e-14 * A.row(i).norm() * p.norm()) continue;
      const double r = std::max(0.0, (b[i] - A.row(i).dot(x)) / ap);
      if (r < alpha) {
        alpha = r;
        blocking = i;
      }
    }
    if (ray && blocking < 0) {
      throw QpUnboundedError("QP objective is unbounded below along a feasible ray");
    }
    x += alpha * p;
    if (blocking >= 0) {
      working.push_back(static_cast<int>(blocking));
      in_working[static_cast<size_t>(blocking)] = 1;
    }
  }
  throw QpError("QP active-set iteration limit reached");
}

}  // namespace detail

inline QpSolution solve_qp(const QpProblem& prob, const QpOptions& opts = {}) {
  const Eigen::Index n = prob.H.rows();
  const Eigen::Index k = prob.A.rows();
  if (prob.H.cols() != n || prob.f.size() != n ||
      (k > 0 && prob.A.cols() != n) || prob.b.size() != k) {
    throw QpError("QP dimensions are inconsistent");
  }
  if ((prob.H - prob.H.transpose()).norm() >
      1e-12 * std::max(1.0, prob.H.norm())) {
    throw QpError("QP Hessian must be symmetric");
  }
  if (n > 0 && Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(prob.H)
                       .eigenvalues()
                       .minCoeff() < -1e-10 * std::max(1.0, prob.H.norm())) {
    throw QpError("QP Hessian must be positive semidefinite");
  }
  const int max_iter =
      opts.max_iterations > 0 ? opts.max_iterations
                              : static_cast<int>(50 * (n + k) + 50);
  const Eigen::MatrixXd A = k > 0 ? prob.A : Eigen::MatrixXd(0, n);

  Eigen::VectorXd x0 = opts.initial_point.value_or(Eigen::VectorXd::Zero(n));
  if (x0.size() != n) x0 = Eigen::VectorXd::Zero(n);
  int phase_one_iterations = 0;

  if (max_violation(A, prob.b, x0) > 0.0) {
    // Phase one: minimize t subject to A x - t <= b, t >= 0.
    Eigen::MatrixXd A1 = Eigen::MatrixXd::Zero(k + 1, n + 1);
    A1.topLeftCorner(k, n) = A;
    A1.col(n).head(k).setConstant(-1.0);
    A1(k, n) = -1.0;
    Eigen::VectorXd b1(k + 1);
    b1 << prob.b, 0.0;
    Eigen::VectorXd f1 = Eigen::VectorXd::Zero(n + 1);
    f1[n] = 1.0;
    Eigen::VectorXd z0(n + 1);
    z0 << x0, max_violation(A, prob.b, x0);
    const detail::ActiveSetResult r1 = detail::active_set(
        Eigen::MatrixXd::Zero(n + 1, n + 1), f1, A1, b1, z0, max_iter);
    phase_one_iterations = r1.iterations;
    const double t = r1.x[n];
    if (t > 1e-9 * std::max(1.0, prob.b.cwiseAbs().maxCoeff())) {
      std::vector<int> cert;
      for (size_t i = 0; i < r1.working.size(); ++i) {
        if (r1.working[i] < k && r1.lambda[static_cast<Eigen::Index>(i)] > 0.0) {
          cert.push_back(r1.working[i]);
        }
      }
      std::sort(cert.begin(), cert.end());
      std::string rows;
      for (int c : cert) rows += (rows.empty() ? "" : ", ") + std::to_string(c);
      throw QpInfeasibleError(
          "QP is infeasible; conflicting constraint rows {" + rows + "}", cert);
    }
    x0 = r1.x.head(n);
  }

  const detail::ActiveSetResult r =
      detail::active_set(prob.H, prob.f, A, prob.b, x0, max_iter);

  QpSolution sol;
  sol.x = r.x;
  sol.multipliers = Eigen::VectorXd::Zero(k);
  for (size_t i = 0; i < r.working.size(); ++i) {
    sol.multipliers[r.working[i]] = r.lambda[static_cast<Eigen::Index>(i)];
  }
  sol.active_set = r.working;
  std::sort(sol.active_set.begin(), sol.active_set.end());
  sol.iterations = r.iterations + phase_one_iterations;
  sol.objective = qp_objective(prob, sol.x);
  return sol;
}

}  // namespace quadpend::numerics
