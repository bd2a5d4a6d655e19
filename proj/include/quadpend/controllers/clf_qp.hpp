#pragma once

// CLF-QP on the feedback-linearized output dynamics.
//
// V(eta) = eta' P eta with P from the CARE on (F, G, Q). Each call solves
//
//   minimize    mu' mu
//   subject to  2 eta' P G mu <= -eta' (F'P + P F + c3 P) eta
//               u_min <= (A(x)B)^-1 (y_ddot_d + mu - Lf_h) <= u_max
//
// where mu = y_ddot - y_ddot_d is the output error acceleration (mu equals
// the virtual input v for set-point references). If the program is
// infeasible the decrease row gets an L1-penalized slack and the box rows
// stay hard.

#include <algorithm>
#include <string>
#include <vector>

#include "quadpend/controllers/fbl.hpp"
#include "quadpend/controllers/gains.hpp"
#include "quadpend/numerics/care.hpp"
#include "quadpend/numerics/qp.hpp"

namespace quadpend::controllers {

struct ClfDesign {
  Mat8 P = Mat8::Identity();
  double c3 = 0.0;  // lambda_min(Q) / lambda_max(P)
};

inline ClfDesign design_clf(const ControllerGains& gains) {
  numerics::CareProblem prob{output_dynamics_F(), output_dynamics_G(),
                             Mat8(gains.q_care.asDiagonal()),
                             Eigen::Matrix4d::Identity()};
  ClfDesign d;
  d.P = numerics::solve_care(prob);
  const double lambda_max_P =
      Eigen::SelfAdjointEigenSolver<Mat8>(d.P).eigenvalues().maxCoeff();
  d.c3 = gains.q_care.minCoeff() / lambda_max_P;
  return d;
}

inline double clf_value(const Vec8& eta, const Mat8& P) {
  return eta.dot(P * eta);
}

// V_dot along eta_dot = F eta + G mu.
inline double clf_derivative(const Vec8& eta, const Vec4& mu, const Mat8& P) {
  const Mat8 F = output_dynamics_F();
  return eta.dot((F.transpose() * P + P * F) * eta) +
         2.0 * eta.dot(P * output_dynamics_G() * mu);
}

struct ClfQpReport {
  double V = 0.0;
  double V_dot = 0.0;        // predicted, for the returned mu
  double decrease_bound = 0.0;  // -c3 V
  bool relaxed = false;
  double slack = 0.0;
  int iterations = 0;
  std::vector<int> active_set;
};

struct ClfQpResult {
  ControlCommand command;
  Vec4 mu = Vec4::Zero();
  ClfQpReport report;
};

inline ClfQpResult clf_qp_controller(const QuadState& s,
                                     const OutputReference& ref,
                                     const ClfDesign& design,
                                     const ControllerGains& gains,
                                     const VehicleParams& p) {
  const FblTerms terms = fbl_terms(s, p);
  const Mat4 M = decoupling_matrix(terms, p);
  const Eigen::PartialPivLU<Mat4> M_lu(M);
  const Mat4 M_inv = M_lu.inverse();
  const Vec8 eta = output_error(s, ref);
  const Mat8 F = output_dynamics_F();
  const Mat84 G = output_dynamics_G();

  // u = M^-1 mu + u_ff
  const Vec4 u_ff = M_lu.solve(ref.y_ddot - terms.lf_h);
  const Eigen::Matrix<double, 1, 4> clf_row = 2.0 * eta.transpose() * design.P * G;
  const double clf_rhs =
      -eta.dot((F.transpose() * design.P + design.P * F + design.c3 * design.P) * eta);

  numerics::QpProblem qp;
  qp.H = 2.0 * Eigen::MatrixXd::Identity(4, 4);
  qp.f = Eigen::VectorXd::Zero(4);
  qp.A.resize(9, 4);
  qp.b.resize(9);
  qp.A.row(0) = clf_row;
  qp.b[0] = clf_rhs;
  qp.A.middleRows(1, 4) = M_inv;
  qp.b.segment(1, 4) = p.u_max - u_ff;
  qp.A.middleRows(5, 4) = -M_inv;
  qp.b.segment(5, 4) = u_ff - p.u_min;

  ClfQpResult out;
  Vec4 mu;
  try {
    const numerics::QpSolution sol = numerics::solve_qp(qp);
    mu = sol.x;
    out.report.iterations = sol.iterations;
    out.report.active_set = sol.active_set;
  } catch (const QpInfeasibleError&) {
    // Relax the decrease row: variables (mu, slack).
    numerics::QpProblem rq;
    rq.H = Eigen::MatrixXd::Zero(5, 5);
    rq.H.topLeftCorner(4, 4) = qp.H;
    rq.f = Eigen::VectorXd::Zero(5);
    rq.f[4] = gains.clf_slack_weight;
    rq.A = Eigen::MatrixXd::Zero(10, 5);
    rq.A.topLeftCorner(9, 4) = qp.A;
    rq.A(0, 4) = -1.0;
    rq.A(9, 4) = -1.0;
    rq.b.resize(10);
    rq.b << qp.b, 0.0;
    const numerics::QpSolution sol = numerics::solve_qp(rq);
    mu = sol.x.head<4>();
    out.report.relaxed = true;
    out.report.slack = sol.x[4];
    out.report.iterations = sol.iterations;
    out.report.active_set = sol.active_set;
  }

  // Rounding can leave u a hair outside the box; the rows are hard.
  const Vec4 u = (M_inv * mu + u_ff).cwiseMax(p.u_min).cwiseMin(p.u_max);
  out.command = ControlCommand::from_rotor_commands(u, p);
  out.mu = mu;
  out.report.V = clf_value(eta, design.P);
  out.report.V_dot = clf_derivative(eta, mu, design.P);
  out.report.decrease_bound = -design.c3 * out.report.V;
  return out;
}

}  // namespace quadpend::controllers
