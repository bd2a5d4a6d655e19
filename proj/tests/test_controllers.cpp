#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "quadpend/quadpend.hpp"

namespace qp = quadpend;
namespace ctl = quadpend::controllers;
namespace num = quadpend::numerics;
namespace trj = quadpend::trajectories;
using qp::Vec2;
using qp::Vec3;
using qp::Vec4;
using ctl::Mat8;
using ctl::Vec8;

namespace {

std::mt19937_64& rng() {
  static std::mt19937_64 gen(99);
  return gen;
}

double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

qp::PendulumState random_pendulum(double L) {
  const double r = uniform(0.0, 0.9 * L), th = uniform(-M_PI, M_PI);
  return {r * std::cos(th), r * std::sin(th), uniform(-1, 1), uniform(-1, 1)};
}

qp::QuadState step_quad(const qp::QuadState& s, const qp::ControlCommand& c,
                        const qp::VehicleParams& p, double dt) {
  const auto f = [&](double, const qp::Vec12& x) {
    return qp::quad_derivative(qp::QuadState::from_vector(x), c, p);
  };
  return qp::QuadState::from_vector(num::rk4_step(f, 0.0, s.to_vector(), dt));
}

Mat8 care_identity() {
  return ctl::design_clf(ctl::ControllerGains{}).P;
}

}  // namespace

// ---- feedback linearization ---------------------------------------------

TEST(FblTerms, Hover) {
  const qp::VehicleParams p;
  const ctl::FblTerms t = ctl::fbl_terms(qp::QuadState{}, p);
  EXPECT_EQ(t.lf_h, Vec4(p.g, 0, 0, 0));
  qp::Mat4 expected = qp::Mat4::Zero();
  expected(0, 0) = -1.0 / p.m;
  expected.bottomRightCorner<3, 3>() = p.inertia.cwiseInverse().asDiagonal();
  EXPECT_LT((t.A_x - expected).norm(), 1e-15);
}

TEST(FblTerms, SpinningBody) {
  qp::VehicleParams p;
  p.inertia = Vec3(1, 2, 3);
  qp::QuadState s;
  s.omega = Vec3(1, 2, 3);
  const ctl::FblTerms t = ctl::fbl_terms(s, p);
  // Zdot(0) w with qdot = w: (6, -3, 2); gyroscopic term (-6, 3, -2/3).
  EXPECT_NEAR(t.lf_h[1], 0.0, 1e-14);
  EXPECT_NEAR(t.lf_h[2], 0.0, 1e-14);
  EXPECT_NEAR(t.lf_h[3], 4.0 / 3.0, 1e-14);
}

TEST(FblTerms, OutputAccelerationMatchesFiniteDifference) {
  const qp::VehicleParams p;
  qp::QuadState s;
  s.p = Vec3(0.1, 0.2, -1.0);
  s.v = Vec3(0.3, -0.1, 0.2);
  s.q = Vec3(0.2, -0.15, 0.4);
  s.omega = Vec3(0.5, -0.3, 0.8);
  const Vec4 u(12000, 12600, 12300, 12900);
  const auto c = qp::ControlCommand::from_rotor_commands(u, p);
  const double h = 1e-4;
  // Integrate back and forward from s with the same command.
  const qp::QuadState fwd = step_quad(s, c, p, h);
  const qp::QuadState bwd = step_quad(s, c, p, -h);
  const Vec4 y_ddot_fd = (ctl::output(fwd) - 2.0 * ctl::output(s) + ctl::output(bwd)) / (h * h);
  const Vec4 y_ddot = ctl::output_acceleration(s, u, p);
  EXPECT_LT((y_ddot_fd - y_ddot).norm() / y_ddot.norm(), 1e-3);
}

TEST(FblRegulator, GravityCompensationAtSetpoint) {
  const qp::VehicleParams p;
  qp::QuadState s;
  s.p.z() = -1.0;
  const qp::ControlCommand c = ctl::fbl_regulator(s, Vec4(-1, 0, 0, 0), care_identity(), p);
  EXPECT_NEAR(c.thrust(), p.m * p.g, 1e-12);
  EXPECT_LT(c.torque().norm(), 1e-12);
}

TEST(FblRegulator, LyapunovDecrease) {
  const qp::VehicleParams p;
  const ctl::ClfDesign d = ctl::design_clf(ctl::ControllerGains{});
  const Vec4 y_d(-1, 0, 0, 0);
  qp::QuadState s;
  s.p.z() = -1.3;
  s.q = Vec3(0.1, -0.08, 0.2);
  const double dt = 1e-3;
  double V = ctl::clf_value(Vec8((Vec8() << ctl::output(s) - y_d, ctl::output_rate(s)).finished()), d.P);
  for (int k = 0; k < 5000; ++k) {
    s = step_quad(s, ctl::fbl_regulator(s, y_d, d.P, p), p, dt);
    Vec8 eta;
    eta << ctl::output(s) - y_d, ctl::output_rate(s);
    const double V_next = ctl::clf_value(eta, d.P);
    ASSERT_LE(V_next, V + 1e-15) << k;
    ASSERT_LE((V_next - V) / dt, -d.c3 * V + 1e-3) << k;
    V = V_next;
  }
}

TEST(FblRegulator, AltitudeStepSettlingTime) {
  // Slowest closed-loop pole of F - G G' P: s^2 + sqrt(3) s + 1.
  const qp::VehicleParams p;
  const Mat8 P = care_identity();
  const Eigen::Matrix<double, 4, 8> K = ctl::output_dynamics_G().transpose() * P;
  const Mat8 Acl = ctl::output_dynamics_F() - ctl::output_dynamics_G() * K;
  const double sigma = -num::max_real_eigenvalue(Acl);
  EXPECT_NEAR(sigma, std::sqrt(3.0) / 2.0, 1e-9);
  const double predicted = std::log(50.0) / sigma;

  const Vec4 y_d(-2, 0, 0, 0);
  qp::QuadState s;
  s.p.z() = -1.0;
  const double dt = 1e-3;
  double last_outside = 0.0;
  for (int k = 1; k <= 15000; ++k) {
    s = step_quad(s, ctl::fbl_regulator(s, y_d, P, p), p, dt);
    if ((ctl::output(s) - y_d).norm() > 0.02) last_outside = k * dt;
  }
  EXPECT_NEAR(last_outside, predicted, 0.2 * predicted);
}

TEST(FblTracker, MatchesRegulatorAtEquilibrium) {
  const qp::VehicleParams p;
  qp::QuadState s;
  s.p = Vec3(0.5, -0.2, -1.5);
  s.q.z() = 0.3;
  ctl::OutputReference ref;
  ref.y = ctl::output(s);
  const qp::ControlCommand a = ctl::fbl_tracker(s, ref, ctl::ControllerGains{}, p);
  const qp::ControlCommand b = ctl::fbl_regulator(s, ref.y, care_identity(), p);
  EXPECT_LT((a.u() - b.u()).norm(), 1e-9);
  EXPECT_NEAR(a.thrust(), p.m * p.g, 1e-12);
}

namespace {

// Altitude-only tracking under fbl_tracker; returns z error samples.
std::vector<double> track_altitude(const ctl::ControllerGains& gains, double z0,
                                   const std::function<Vec3(double)>& ref_zdd, double T) {
  const qp::VehicleParams p;
  qp::QuadState s;
  s.p.z() = z0;
  const double dt = 1e-3;
  std::vector<double> err;
  const int n = static_cast<int>(std::lround(T / dt));
  for (int k = 0; k <= n; ++k) {
    const double t = k * dt;
    const Vec3 r = ref_zdd(t);  // z, z', z''
    err.push_back(s.p.z() - r[0]);
    ctl::OutputReference ref;
    ref.y[0] = r[0];
    ref.y_dot[0] = r[1];
    ref.y_ddot[0] = r[2];
    s = step_quad(s, ctl::fbl_tracker(s, ref, gains, p), p, dt);
  }
  return err;
}

}  // namespace

TEST(FblTracker, SinusoidalAltitude) {
  const auto ref = [](double t) {
    return Vec3(-1.0 + 0.1 * std::sin(t), 0.1 * std::cos(t), -0.1 * std::sin(t));
  };
  const std::vector<double> e = track_altitude(ctl::ControllerGains{}, -1.0, ref, 10.0);
  double worst = 0.0;
  for (std::size_t k = 2000; k < e.size(); ++k) worst = std::max(worst, std::abs(e[k]));
  EXPECT_LT(worst, 1e-3);
}

TEST(FblTracker, CriticallyDampedErrorEnvelope) {
  ctl::ControllerGains gains;
  gains.alpha1 = Vec4::Constant(25.0);
  gains.alpha2 = Vec4::Constant(10.0);
  const auto ref = [](double) { return Vec3(-1.0, 0.0, 0.0); };
  const std::vector<double> e = track_altitude(gains, -0.9, ref, 1.0);
  for (double t : {0.1, 0.5, 1.0}) {
    const double exact = 0.1 * (1.0 + 5.0 * t) * std::exp(-5.0 * t);
    EXPECT_NEAR(e[static_cast<std::size_t>(std::lround(t / 1e-3))], exact, 0.01 * exact) << t;
  }
}

// ---- force allocation -------------------------------------------------------

TEST(PositionAllocation, HoverAtSetpoint) {
  const qp::VehicleParams p;
  qp::QuadState s;
  s.p = Vec3(1, 1, -1);
  ctl::PositionReference ref{s.p, Vec3::Zero(), Vec3::Zero()};
  const ctl::AttitudeSetpoint sp = ctl::position_allocation(s, ref, ctl::ControllerGains{}, p);
  EXPECT_EQ(sp.f_d, Vec3(0, 0, -p.g));
  EXPECT_EQ(sp.q_d, Vec3::Zero());
  EXPECT_DOUBLE_EQ(sp.thrust, p.m * p.g);
}

TEST(PositionAllocation, ForwardDemand) {
  const double g = 9.81, m = 1.3;
  const Vec3 f_d(1, 0, -g);
  const ctl::AttitudeSetpoint sp = ctl::attitude_from_force(f_d, m);
  EXPECT_EQ(sp.q_d.x(), 0.0);
  EXPECT_NEAR(sp.q_d.y(), std::atan(-1.0 / g), 1e-15);
  // g_1(q_d) * thrust reproduces f_d.
  const Vec3 rebuilt = qp::gravity_direction_map(sp.q_d, m) * sp.thrust;
  EXPECT_LT((rebuilt - f_d).norm(), 1e-9);
}

TEST(PositionAllocation, LateralDemand) {
  const double g = 9.81;
  const Vec3 f_d(0, 1, -g);
  const ctl::AttitudeSetpoint sp = ctl::attitude_from_force(f_d, 1.0);
  EXPECT_NEAR(sp.q_d.x(), std::asin(1.0 / f_d.norm()), 1e-15);
  EXPECT_NEAR(sp.q_d.y(), 0.0, 1e-15);
  EXPECT_LT((qp::gravity_direction_map(sp.q_d, 1.0) * sp.thrust - f_d).norm(), 1e-9);
}

TEST(PositionAllocation, ReconstructsRandomForces) {
  for (int i = 0; i < 500; ++i) {
    const Vec3 f_d(uniform(-5, 5), uniform(-5, 5), uniform(-15, -2));
    const double psi = uniform(-M_PI, M_PI);
    const ctl::AttitudeSetpoint sp = ctl::attitude_from_force(f_d, 1.0, psi);
    EXPECT_LT((qp::gravity_direction_map(sp.q_d, 1.0) * sp.thrust - f_d).norm(), 1e-9);
  }
}

TEST(PositionAllocation, ZeroForceIsUndefined) {
  EXPECT_THROW(ctl::attitude_from_force(Vec3::Zero(), 1.0), qp::AllocationError);
}

// ---- CLF-QP -----------------------------------------------------------------

TEST(ClfQp, DecayRateConstant) {
  const ctl::ClfDesign d = ctl::design_clf(ctl::ControllerGains{});
  const double lmax = Eigen::SelfAdjointEigenSolver<Mat8>(d.P).eigenvalues().maxCoeff();
  EXPECT_NEAR(d.c3, 1.0 / lmax, 1e-12);
}

TEST(ClfQp, ZeroErrorGivesGravityCompensation) {
  const qp::VehicleParams p;
  const ctl::ControllerGains gains;
  const ctl::ClfDesign d = ctl::design_clf(gains);
  qp::QuadState s;
  s.p.z() = -2.0;
  ctl::OutputReference ref;
  ref.y = ctl::output(s);
  const ctl::ClfQpResult r = ctl::clf_qp_controller(s, ref, d, gains, p);
  EXPECT_EQ(r.mu, Vec4::Zero());
  EXPECT_FALSE(r.report.relaxed);
  EXPECT_NEAR(r.command.thrust(), p.m * p.g, 1e-9);
  EXPECT_LT(r.command.torque().norm(), 1e-9);
}

TEST(ClfQp, InactiveRowReturnsZero) {
  const qp::VehicleParams p;
  const ctl::ControllerGains gains;
  const ctl::ClfDesign d = ctl::design_clf(gains);
  qp::QuadState s;
  s.p.z() = -1.1;
  s.v.z() = 0.05;  // already moving toward the reference
  ctl::OutputReference ref;
  ref.y[0] = -1.0;
  const Vec8 eta = ctl::output_error(s, ref);
  // Decrease row at mu = 0 holds strictly.
  ASSERT_LT(ctl::clf_derivative(eta, Vec4::Zero(), d.P), -d.c3 * ctl::clf_value(eta, d.P));
  const ctl::ClfQpResult r = ctl::clf_qp_controller(s, ref, d, gains, p);
  EXPECT_EQ(r.mu, Vec4::Zero());
  EXPECT_TRUE(r.report.active_set.empty());
}

TEST(ClfQp, DecreaseAlongClosedLoop) {
  qp::VehicleParams p;
  p.u_min = Vec4::Constant(-1e9);
  p.u_max = Vec4::Constant(1e9);
  const ctl::ControllerGains gains;
  const ctl::ClfDesign d = ctl::design_clf(gains);
  for (int trial = 0; trial < 5; ++trial) {
    qp::QuadState s;
    s.p = Vec3(0, 0, -1.0 + uniform(-0.5, 0.5));
    s.v.z() = uniform(-0.5, 0.5);
    s.q = Vec3(uniform(-0.3, 0.3), uniform(-0.3, 0.3), uniform(-0.5, 0.5));
    s.omega = Vec3(uniform(-0.5, 0.5), uniform(-0.5, 0.5), uniform(-0.5, 0.5));
    ctl::OutputReference ref;
    ref.y[0] = -1.0;
    const double dt = 1e-3;
    for (int k = 0; k < 5000; ++k) {
      const ctl::ClfQpResult r = ctl::clf_qp_controller(s, ref, d, gains, p);
      ASSERT_LE(r.report.V_dot, r.report.decrease_bound + 1e-6) << trial << " " << k;
      const qp::QuadState next = step_quad(s, r.command, p, dt);
      const double V_next = ctl::clf_value(ctl::output_error(next, ref), d.P);
      ASSERT_LE((V_next - r.report.V) / dt, -d.c3 * r.report.V + 1e-3) << trial << " " << k;
      s = next;
    }
  }
}

TEST(ClfQp, CommandsStayWithinRotorBounds) {
  const qp::VehicleParams p;
  const ctl::ControllerGains gains;
  const ctl::ClfDesign d = ctl::design_clf(gains);
  for (int i = 0; i < 300; ++i) {
    qp::QuadState s;
    s.p.z() = uniform(-3, 0);
    s.v = Vec3(uniform(-2, 2), uniform(-2, 2), uniform(-2, 2));
    s.q = Vec3(uniform(-0.6, 0.6), uniform(-0.6, 0.6), uniform(-1, 1));
    s.omega = Vec3(uniform(-2, 2), uniform(-2, 2), uniform(-2, 2));
    ctl::OutputReference ref;
    ref.y = Vec4(uniform(-3, 0), uniform(-0.5, 0.5), uniform(-0.5, 0.5), uniform(-1, 1));
    const ctl::ClfQpResult r = ctl::clf_qp_controller(s, ref, d, gains, p);
    EXPECT_TRUE(r.command.u().allFinite());
    EXPECT_TRUE(((r.command.u() - p.u_min).array() >= 0).all());
    EXPECT_TRUE(((p.u_max - r.command.u()).array() >= 0).all());
  }
}

// ---- pendulum feedback linearization ------------------------------------------

TEST(PendulumXi, UprightAtRest) {
  const ctl::ControllerGains gains;
  EXPECT_EQ(ctl::pendulum_fbl_xi({}, {}, qp::PendulumParams{}, gains, 9.81), Vec3::Zero());
}

TEST(PendulumXi, SolvesInputEquation) {
  const qp::PendulumParams pp;
  const ctl::ControllerGains gains;
  for (int i = 0; i < 1000; ++i) {
    const qp::PendulumState ps = random_pendulum(pp.L);
    ctl::PendulumReference ref{Vec2(uniform(-0.1, 0.1), uniform(-0.1, 0.1)),
                               Vec2(uniform(-0.1, 0.1), uniform(-0.1, 0.1)),
                               Vec2(uniform(-0.1, 0.1), uniform(-0.1, 0.1))};
    const Vec3 xi = ctl::pendulum_fbl_xi(ps, ref, pp, gains, 9.81);
    const Vec2 nu = ctl::pendulum_virtual_input(ps, ref, gains);
    const Vec2 achieved = qp::pendulum_derivative(ps, xi, pp, 9.81);
    EXPECT_LT((achieved - nu).norm(), 1e-10 * std::max(1.0, nu.norm())) << i;
  }
}

TEST(PendulumXi, MinimumNorm) {
  const qp::PendulumParams pp;
  const ctl::ControllerGains gains;
  for (int i = 0; i < 200; ++i) {
    const qp::PendulumState ps = random_pendulum(pp.L);
    const ctl::PendulumReference ref;
    const Vec3 xi = ctl::pendulum_fbl_xi(ps, ref, pp, gains, 9.81);
    // KKT system of min |x|^2 s.t. B x = nu - f.
    const qp::Mat23 Bp = qp::pendulum_input_matrix(ps.a, ps.b, pp.L);
    Eigen::Matrix<double, 5, 5> K = Eigen::Matrix<double, 5, 5>::Zero();
    K.topLeftCorner<3, 3>().setIdentity();
    K.topRightCorner<3, 2>() = Bp.transpose();
    K.bottomLeftCorner<2, 3>() = Bp;
    Eigen::Matrix<double, 5, 1> rhs = Eigen::Matrix<double, 5, 1>::Zero();
    rhs.tail<2>() = ctl::pendulum_virtual_input(ps, ref, gains) - qp::pendulum_drift(ps, pp, 9.81);
    const Vec3 oracle = K.fullPivLu().solve(rhs).head<3>();
    EXPECT_LT((xi - oracle).norm(), 1e-9 * std::max(1.0, oracle.norm())) << i;
  }
}

TEST(PendulumXiPrime, UprightAtRest) {
  const ctl::ControllerGains gains;
  EXPECT_EQ(ctl::pendulum_fbl_xi_prime({}, 0.0, {}, qp::PendulumParams{}, gains, 9.81),
            Vec2::Zero());
}

TEST(PendulumXiPrime, ConsistentWithDynamics) {
  const qp::PendulumParams pp;
  const ctl::ControllerGains gains;
  for (int i = 0; i < 1000; ++i) {
    const qp::PendulumState ps = random_pendulum(pp.L);
    const double az = uniform(-3, 3);
    ctl::PendulumReference ref{Vec2(0.05, -0.02), Vec2(0.1, 0.0), Vec2(0.0, -0.3)};
    const Vec2 xp = ctl::pendulum_fbl_xi_prime(ps, az, ref, pp, gains, 9.81);
    const Vec2 achieved = qp::pendulum_derivative(ps, Vec3(xp.x(), xp.y(), az), pp, 9.81);
    const Vec2 nu = ctl::pendulum_virtual_input(ps, ref, gains);
    EXPECT_LT((achieved - nu).norm(), 1e-10 * std::max(1.0, xp.norm())) << i;
  }
}

TEST(PendulumXiPrime, PlanarBlock) {
  const double a = 0.2, b = -0.1, L = 0.5, s = 3.0 / (4.0 * L * L);
  const qp::Mat2 Bpp = ctl::pendulum_planar_input_matrix(a, b, L);
  EXPECT_DOUBLE_EQ(Bpp(0, 0), s * (a * a - L * L));
  EXPECT_DOUBLE_EQ(Bpp(0, 1), s * a * b);
  EXPECT_DOUBLE_EQ(Bpp(1, 0), s * a * b);
  EXPECT_DOUBLE_EQ(Bpp(1, 1), s * (b * b - L * L));
  EXPECT_EQ(Bpp, qp::pendulum_input_matrix(a, b, L).leftCols<2>());
}

// ---- pendulum + position LQR ----------------------------------------------------

TEST(PendulumLqr, ZeroAtReference) {
  const ctl::LqrDesign d = ctl::design_pendulum_lqr(ctl::ControllerGains{}, 9.81, 0.5);
  const qp::PendulumState ps{0.01, -0.02, 0.03, 0.0};
  qp::QuadState s;
  s.p = Vec3(1, 2, -1);
  s.v = Vec3(0.1, 0.2, 0);
  const Vec8 ref = ctl::pendulum_position_state(ps, s);
  const ctl::AttitudeSetpoint sp = ctl::pendulum_position_lqr(ps, s, ref, d.K, 0.5);
  EXPECT_EQ(sp.q_d, Vec3::Zero());
}

TEST(PendulumLqr, ClosedLoopIsHurwitz) {
  const ctl::LqrDesign d = ctl::design_pendulum_lqr(ctl::ControllerGains{}, 9.81, 0.5);
  EXPECT_LT(num::max_real_eigenvalue(d.model.A - d.model.B * d.K), 0.0);
}

TEST(PendulumLqr, FullyControllable) {
  const ctl::LinearModel m = ctl::pendulum_position_linear_model(9.81, 0.5);
  EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(ctl::controllability_matrix(m)).rank(), 8);
}

TEST(PendulumLqr, AngleDemandIsClamped) {
  const ctl::LqrDesign d = ctl::design_pendulum_lqr(ctl::ControllerGains{}, 9.81, 0.5);
  qp::QuadState s;
  s.p = Vec3(50, -50, -1);
  const ctl::AttitudeSetpoint sp = ctl::pendulum_position_lqr({}, s, Vec8::Zero(), d.K, 0.4);
  EXPECT_DOUBLE_EQ(std::abs(sp.q_d.x()), 0.4);
  EXPECT_DOUBLE_EQ(std::abs(sp.q_d.y()), 0.4);
}

// ---- trajectories ---------------------------------------------------------------

TEST(Trajectory, SetPoint) {
  trj::TrajectorySpec spec;
  spec.setpoint = Vec3(1, 1, -1);
  for (double t : {0.0, 3.7, 100.0}) {
    const trj::ReferenceSample r = trj::sample_trajectory(spec, t);
    EXPECT_EQ(r.position.value, Vec3(1, 1, -1));
    EXPECT_EQ(r.position.d1, Vec3::Zero());
    EXPECT_EQ(r.position.d2, Vec3::Zero());
  }
}

TEST(Trajectory, CircleAtStart) {
  trj::TrajectorySpec spec;
  spec.kind = trj::TrajectoryKind::kCircle;
  spec.radius = 1.0;
  spec.rate = 1.0;
  spec.altitude = 2.0;
  const trj::ReferenceSample r = trj::sample_trajectory(spec, 0.0);
  EXPECT_EQ(r.position.value, Vec3(1, 0, -2));
  EXPECT_EQ(r.position.d1, Vec3(0, 1, 0));
  EXPECT_EQ(r.position.d2, Vec3(-1, 0, 0));
}

TEST(Trajectory, PendulumCirclePeriod) {
  trj::TrajectorySpec spec;
  spec.kind = trj::TrajectoryKind::kPendulumCircle;
  spec.radius = 0.1;
  spec.rate = 2.0 * M_PI * 0.1;
  for (double t : {0.0, 1.3, 7.2}) {
    const trj::ReferenceSample a = trj::sample_trajectory(spec, t);
    const trj::ReferenceSample b = trj::sample_trajectory(spec, t + 10.0);
    EXPECT_LT((a.pendulum.value - b.pendulum.value).norm(), 1e-15);
    EXPECT_LT((a.pendulum.d1 - b.pendulum.d1).norm(), 1e-15);
  }
}

namespace {

// Central differences of value -> d1 and d1 -> d2 on position and pendulum.
void check_derivative_channels(const trj::TrajectorySpec& spec, double t0, double t1,
                               double curvature) {
  const double h = 1e-3, tol = 10.0 * h * h * std::max(1.0, curvature);
  for (double t = t0; t <= t1; t += 0.0731) {
    const auto m = trj::sample_trajectory(spec, t - h);
    const auto c = trj::sample_trajectory(spec, t);
    const auto p = trj::sample_trajectory(spec, t + h);
    EXPECT_LT(((p.position.value - m.position.value) / (2 * h) - c.position.d1).norm(), tol) << t;
    EXPECT_LT(((p.position.d1 - m.position.d1) / (2 * h) - c.position.d2).norm(), tol) << t;
    EXPECT_LT(((p.pendulum.value - m.pendulum.value) / (2 * h) - c.pendulum.d1).norm(), tol) << t;
    EXPECT_LT(((p.pendulum.d1 - m.pendulum.d1) / (2 * h) - c.pendulum.d2).norm(), tol) << t;
  }
}

}  // namespace

TEST(Trajectory, AnalyticDerivativesAgreeWithDifferences) {
  trj::TrajectorySpec spec;
  spec.kind = trj::TrajectoryKind::kCircle;
  spec.radius = 1.5;
  spec.rate = 0.7;
  check_derivative_channels(spec, 0.01, 20.0, 1.5 * std::pow(0.7, 4));
  spec.kind = trj::TrajectoryKind::kPendulumCircle;
  spec.radius = 0.1;
  spec.rate = 2.0 * M_PI * 0.1;
  check_derivative_channels(spec, 0.01, 20.0, 1.0);
  spec.kind = trj::TrajectoryKind::kTakeoffThenCircle;
  spec.radius = 1.0;
  spec.rate = 0.5;
  check_derivative_channels(spec, 0.01, 20.0, 1.0);
}

TEST(Trajectory, TakeoffThenCircleIsSmooth) {
  trj::TrajectorySpec spec;
  spec.kind = trj::TrajectoryKind::kTakeoffThenCircle;
  spec.radius = 1.0;
  spec.rate = 0.5;
  spec.altitude = 2.0;
  spec.transition_time = 5.0;
  const double eps = 1e-12;
  for (double tj : {spec.transition_time, spec.transition_time + spec.blend_window}) {
    const auto before = trj::sample_trajectory(spec, tj - eps);
    const auto after = trj::sample_trajectory(spec, tj);
    EXPECT_LT((before.position.value - after.position.value).norm(), 1e-9) << tj;
    EXPECT_LT((before.position.d1 - after.position.d1).norm(), 1e-9) << tj;
    EXPECT_LT((before.position.d2 - after.position.d2).norm(), 1e-9) << tj;
  }
  const auto start = trj::sample_trajectory(spec, 0.0);
  EXPECT_EQ(start.position.value, Vec3(1, 0, 0));
  const auto top = trj::sample_trajectory(spec, spec.transition_time);
  EXPECT_LT((top.position.value - Vec3(1, 0, -2)).norm(), 1e-15);
  // After the ramp the speed is R k.
  const auto late = trj::sample_trajectory(spec, 12.0);
  EXPECT_NEAR(late.position.d1.norm(), 0.5, 1e-12);
}

TEST(Trajectory, RawSwitchHasVelocityJump) {
  trj::TrajectorySpec spec;
  spec.kind = trj::TrajectoryKind::kTakeoffThenCircle;
  spec.blend = false;
  const auto before = trj::sample_trajectory(spec, spec.transition_time - 1e-12);
  const auto after = trj::sample_trajectory(spec, spec.transition_time);
  EXPECT_LT((before.position.value - after.position.value).norm(), 1e-9);
  EXPECT_NEAR((after.position.d1 - before.position.d1).norm(), spec.radius * spec.rate, 1e-9);
}

TEST(Trajectory, Validation) {
  trj::TrajectorySpec spec;
  spec.radius = -1.0;
  EXPECT_THROW(spec.validate(), qp::ValidationError);
  spec = {};
  spec.kind = trj::TrajectoryKind::kTakeoffThenCircle;
  spec.transition_time = 0.0;
  EXPECT_THROW(spec.validate(), qp::ValidationError);
  EXPECT_THROW(trj::trajectory_kind_from_string("spiral"), qp::ValidationError);
}

TEST(SetpointDifferentiator, ConstantStream) {
  trj::SetpointDifferentiator<3> diff(1e-3);
  const Vec3 q(0.1, -0.2, 0.3);
  trj::SetpointDifferentiator<3>::Output out;
  for (int k = 0; k < 5; ++k) out = diff.push(q);
  EXPECT_FALSE(out.startup);
  EXPECT_LT(out.rate.norm(), 1e-12);
  EXPECT_LT(out.accel.norm(), 1e-9);
}

TEST(SetpointDifferentiator, LinearRamp) {
  using D1 = trj::SetpointDifferentiator<1>;
  const double dt = 0.01;
  D1 diff(dt);
  D1::Output out;
  for (int k = 0; k < 10; ++k) out = diff.push(D1::Vector(k * dt));
  EXPECT_NEAR(out.rate[0], 1.0, 1e-12);
  EXPECT_NEAR(out.accel[0], 0.0, 1e-8);
}

TEST(SetpointDifferentiator, SineTruncationError) {
  using D1 = trj::SetpointDifferentiator<1>;
  const double dt = 1e-3;
  D1 diff(dt);
  double worst = 0.0;
  for (int k = 0; k < 3000; ++k) {
    const double t = k * dt;
    const D1::Output out = diff.push(D1::Vector(std::sin(5 * t)));
    if (!out.startup) worst = std::max(worst, std::abs(out.accel[0] + 25 * std::sin(5 * t)));
  }
  EXPECT_LT(worst / 25.0, 2e-2);
}

TEST(SetpointDifferentiator, StartupFlag) {
  using D1 = trj::SetpointDifferentiator<1>;
  D1 diff(0.1, 3);
  const D1::Output first = diff.push(D1::Vector(1.0));
  EXPECT_TRUE(first.startup);
  EXPECT_EQ(first.rate[0], 0.0);
  const D1::Output second = diff.push(D1::Vector(1.2));
  EXPECT_TRUE(second.startup);
  EXPECT_NEAR(second.rate[0], 2.0, 1e-12);
  D1::Output out;
  for (int k = 2; k < 7; ++k) out = diff.push(D1::Vector(1.0 + 0.2 * k));
  EXPECT_FALSE(out.startup);
  EXPECT_NEAR(out.rate[0], 2.0, 1e-12);
  diff.reset();
  EXPECT_TRUE(diff.push(D1::Vector(0.0)).startup);
}

TEST(SetpointDifferentiator, WideStencilOnQuadratic) {
  using D1 = trj::SetpointDifferentiator<1>;
  const double dt = 1e-3;
  D1 diff(dt, 10);
  D1::Output out;
  double t = 0.0;
  for (int k = 0; k < 40; ++k) {
    t = k * dt;
    out = diff.push(D1::Vector(t * t));
  }
  EXPECT_NEAR(out.rate[0], 2 * t, 1e-10);
  EXPECT_NEAR(out.accel[0], 2.0, 1e-6);
}

TEST(SetpointDifferentiator, RejectsBadArguments) {
  EXPECT_THROW(trj::SetpointDifferentiator<1>(0.0), qp::ValidationError);
  EXPECT_THROW(trj::SetpointDifferentiator<1>(1e-3, 0), qp::ValidationError);
}
