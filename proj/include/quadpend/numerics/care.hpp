#pragma once

// Continuous-time algebraic Riccati equation
//
//   F' P + P F - P G R^-1 G' P + Q = 0
//
// solved through the stable invariant subspace of the Hamiltonian, obtained
// with the matrix sign function, followed by Kleinman-Newton refinement.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>

#include "quadpend/errors.hpp"

namespace quadpend::numerics {

struct CareProblem {
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};

inline Eigen::MatrixXd care_residual(const CareProblem& prob,
                                     const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd Rinv_Gt = prob.R.llt().solve(prob.G.transpose());
  return prob.F.transpose() * P + P * prob.F - P * prob.G * Rinv_Gt * P +
         prob.Q;
}

// Solves A' X + X A + C = 0 by vectorisation; fine for the n <= ~15 used here.
inline Eigen::MatrixXd solve_continuous_lyapunov(const Eigen::MatrixXd& A,
                                                 const Eigen::MatrixXd& C) {
  const Eigen::Index n = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd At = A.transpose();
  Eigen::MatrixXd K(n * n, n * n);
  // vec(A' X) = (I kron A') vec X,  vec(X A) = (A' kron I) vec X
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      K.block(i * n, j * n, n, n) = I(i, j) * At + At(i, j) * I;
    }
  }
  const Eigen::VectorXd rhs =
      -Eigen::Map<const Eigen::VectorXd>(C.data(), n * n);
  const Eigen::VectorXd x = K.fullPivLu().solve(rhs);
  Eigen::MatrixXd X = Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

inline double max_real_eigenvalue(const Eigen::MatrixXd& A) {
  const Eigen::VectorXcd ev = A.eigenvalues();
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) m = std::max(m, ev[i].real());
  return m;
}

namespace detail {

inline bool symmetric(const Eigen::MatrixXd& M) {
  return (M - M.transpose()).norm() <= 1e-12 * std::max(1.0, M.norm());
}

// PBH test on the closed right half-plane.
inline bool stabilizable(const Eigen::MatrixXd& F, const Eigen::MatrixXd& G) {
  const Eigen::Index n = F.rows(), m = G.cols();
  const Eigen::VectorXcd ev = F.eigenvalues();
  const double scale = std::max({1.0, F.norm(), G.norm()});
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i].real() < -1e-10 * scale) continue;
    Eigen::MatrixXcd M(n, n + m);
    M.leftCols(n) = ev[i] * Eigen::MatrixXcd::Identity(n, n) -
                    F.cast<std::complex<double>>();
    M.rightCols(m) = G.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    if (svd.singularValues()(n - 1) < 1e-9 * scale) return false;
  }
  return true;
}

}  // namespace detail

inline Eigen::MatrixXd solve_care(const CareProblem& prob) {
  const Eigen::Index n = prob.F.rows();
  const Eigen::Index m = prob.G.cols();
  if (prob.F.cols() != n || prob.G.rows() != n || prob.Q.rows() != n ||
      prob.Q.cols() != n || prob.R.rows() != m || prob.R.cols() != m) {
    throw CareInvalidProblemError("CARE dimensions are inconsistent");
  }
  if (!detail::symmetric(prob.Q) || !detail::symmetric(prob.R)) {
    throw CareInvalidProblemError("CARE weights must be symmetric");
  }
  if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(prob.Q)
          .eigenvalues()
          .minCoeff() <= 0.0) {
    throw CareInvalidProblemError("CARE state weight Q must be positive definite");
  }
  Eigen::LLT<Eigen::MatrixXd> R_llt(prob.R);
  if (R_llt.info() != Eigen::Success ||
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(prob.R)
              .eigenvalues()
              .minCoeff() <= 0.0) {
    throw CareInvalidProblemError("CARE input weight R must be positive definite");
  }
  if (!detail::stabilizable(prob.F, prob.G)) {
    throw CareNoSolutionError("CARE has no stabilizing solution: (F, G) is not stabilizable");
  }

  const Eigen::MatrixXd S = prob.G * R_llt.solve(prob.G.transpose());
  Eigen::MatrixXd H(2 * n, 2 * n);
  H << prob.F, -S, -prob.Q, -prob.F.transpose();

  // Newton iteration for sign(H) with determinant scaling.
  Eigen::MatrixXd W = H;
  double change = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100 && change > 1e-13; ++it) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(W);
    const double det = std::abs(lu.determinant());
    if (!(det > 0.0) || !std::isfinite(det)) break;
    const double c = std::pow(det, -1.0 / static_cast<double>(2 * n));
    const Eigen::MatrixXd next = 0.5 * (c * W + lu.inverse() / c);
    change = (next - W).norm() / std::max(1.0, next.norm());
    W = next;
  }
  if (!(change < 1e-8) || !W.allFinite()) {
    throw CareNoSolutionError("CARE has no stabilizing solution: Hamiltonian has eigenvalues on the imaginary axis");
  }

  // Stable subspace [I; P] satisfies (W + I) [I; P] = 0.
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd lhs(2 * n, n), rhs(2 * n, n);
  lhs << W.topRightCorner(n, n), W.bottomRightCorner(n, n) + I;
  rhs << W.topLeftCorner(n, n) + I, W.bottomLeftCorner(n, n);
  Eigen::MatrixXd P = lhs.colPivHouseholderQr().solve(-rhs);
  P = (0.5 * (P + P.transpose())).eval();

  // Kleinman-Newton refinement.
  double res = care_residual(prob, P).norm();
  for (int it = 0; it < 8 && res > 1e-14 * std::max(1.0, prob.Q.norm()); ++it) {
    const Eigen::MatrixXd K = R_llt.solve(prob.G.transpose() * P);
    const Eigen::MatrixXd Acl = prob.F - prob.G * K;
    if (max_real_eigenvalue(Acl) >= 0.0) break;
    const Eigen::MatrixXd Pn =
        solve_continuous_lyapunov(Acl, prob.Q + K.transpose() * prob.R * K);
    const double rn = care_residual(prob, Pn).norm();
    if (!(rn < res)) break;
    P = Pn;
    res = rn;
  }

  if (!(res < 1e-8 * prob.Q.norm()) || !P.allFinite()) {
    throw CareNoSolutionError("CARE solution failed the residual check");
  }
  const Eigen::MatrixXd Acl = prob.F - prob.G * R_llt.solve(prob.G.transpose() * P);
  if (!(max_real_eigenvalue(Acl) < -1e-10)) {
    throw CareNoSolutionError("CARE solution is not stabilizing");
  }
  return P;
}

// K = R^-1 G' P
inline Eigen::MatrixXd care_gain(const CareProblem& prob,
                                 const Eigen::MatrixXd& P) {
  return prob.R.llt().solve(prob.G.transpose() * P);
}

}  // namespace quadpend::numerics
