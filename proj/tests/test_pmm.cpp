#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracle/oracle.hpp"
#include "ssnpmm/generators.hpp"
#include "ssnpmm/pmm.hpp"
#include "test_util.hpp"

using namespace ssnpmm;
using testutil::vec;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Problem scalar(double q, double c, double d, double lo, double hi) {
  Problem p;
  p.name = "scalar";
  p.Q = testutil::sparse(Eigen::MatrixXd::Constant(1, 1, q));
  p.A = SparseMatrix(0, 1);
  p.c = vec({c});
  p.b = Vector(0);
  p.d = vec({d});
  p.l = vec({lo});
  p.u = vec({hi});
  return p;
}

pmm::PmmState random_state(std::mt19937_64& rng, const Problem& p, double beta, double rho) {
  pmm::PmmState s;
  s.x = oracle::random_vector(rng, p.n());
  s.y = oracle::random_vector(rng, p.m());
  s.z = oracle::random_vector(rng, p.n());
  s.penalties = pmm::PenaltyState::initial(beta, rho);
  return s;
}

Vector oracle_r(const Vector& x, const Vector& y, const pmm::PmmState& s, const Problem& p) {
  const double beta = s.penalties.beta;
  const Vector v = s.z / beta + x;
  return p.c + Eigen::MatrixXd(p.Q) * x - Eigen::MatrixXd(p.A).transpose() * y + (s.z + beta * x) -
         beta * oracle::clamp_box(v, p.l, p.u) + (x - s.x) / s.penalties.rho;
}

Problem two_var() {
  // min x1 + 1/2 ||x||^2 + |x1|  s.t.  x1 + x2 = 1,  -10 <= x <= 10.
  Problem p;
  p.name = "two";
  p.Q = testutil::sparse(Eigen::MatrixXd::Identity(2, 2));
  Eigen::MatrixXd A(1, 2);
  A << 1, 1;
  p.A = A.sparseView();
  p.c = vec({1, 0});
  p.b = vec({1});
  p.d = vec({1, 0});
  p.l = vec({-10, -10});
  p.u = vec({10, 10});
  return p;
}

}  // namespace

TEST(ResidualR, CancelsOnHandBuiltScalar) {
  // c = 1, Q = 2, A = [1], box [0, 5], x = x_k = 1, z_k = 0: r = 3 - y, so y = 3 gives 0.
  Problem p = scalar(2.0, 1.0, 0.0, 0.0, 5.0);
  p.A = testutil::sparse(Eigen::MatrixXd::Ones(1, 1));
  p.b = vec({1.0});
  pmm::PmmState s;
  s.x = vec({1.0});
  s.y = vec({0.0});
  s.z = vec({0.0});
  s.penalties = pmm::PenaltyState::initial(100, 500);
  EXPECT_EQ(pmm::residual_r(vec({1.0}), vec({3.0}), s, p)[0], 0.0);
}

TEST(ResidualR, FreeBoxDropsConjugateTerm) {
  std::mt19937_64 rng(31);
  Problem p = oracle::random_qp(rng, {5, 2, 0.1, 0.3, false});
  const pmm::PmmState s = random_state(rng, p, 7.0, 3.0);
  const Vector x = oracle::random_vector(rng, 5), y = oracle::random_vector(rng, 2);
  const Vector expect = p.c + p.Q * x - p.A.transpose() * y + (x - s.x) / s.penalties.rho;
  EXPECT_LE((pmm::residual_r(x, y, s, p) - expect).norm(), 1e-13);
}

TEST(ResidualR, MatchesDuplicateFormula) {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 50; ++t) {
    const Problem p = oracle::random_qp(rng, {6, 2, 0.1, 0.3, true});
    const pmm::PmmState s = random_state(rng, p, t % 2 ? 1.0 : 10.0, 5.0);
    const Vector x = oracle::random_vector(rng, 6), y = oracle::random_vector(rng, 2);
    EXPECT_LE((pmm::residual_r(x, y, s, p) - oracle_r(x, y, s, p)).cwiseAbs().maxCoeff(), 1e-14 * 100);
  }
}

TEST(DistF, ZeroAtSubproblemSolution) {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 5; ++t) {
    const Problem p = oracle::random_qp(rng, {5, 2, 0.5, 0.3, true});
    const pmm::PmmState s = random_state(rng, p, 1.0, 10.0);
    const oracle::SubproblemSolution sol = oracle::subproblem_reference(s, p, 20000);
    EXPECT_LE(pmm::dist_F(sol.x, sol.y, s, p), 1e-10);
  }
}

TEST(DistF, SmoothCaseIsPlainNorm) {
  std::mt19937_64 rng(34);
  Problem p = oracle::random_qp(rng, {5, 2, 0.1, 1.0, true});
  p.d.setZero();
  const pmm::PmmState s = random_state(rng, p, 3.0, 4.0);
  const Vector x = oracle::random_vector(rng, 5), y = oracle::random_vector(rng, 2);
  const Vector r = pmm::residual_r(x, y, s, p);
  const Vector e = pmm::dual_block(x, y, s, p);
  EXPECT_NEAR(pmm::dist_F(x, y, s, p), std::sqrt(r.squaredNorm() + e.squaredNorm()), 1e-13);
}

TEST(DistF, MatchesDuplicateFormula) {
  std::mt19937_64 rng(35);
  for (int t = 0; t < 50; ++t) {
    const Problem p = oracle::random_qp(rng, {6, 3, 0.1, 0.3, true});
    const pmm::PmmState s = random_state(rng, p, 2.0, 5.0);
    Vector x = oracle::random_vector(rng, 6);
    if (t % 2) x[1] = x[3] = 0.0;
    const Vector y = oracle::random_vector(rng, 3);
    const Vector r = oracle_r(x, y, s, p);
    Vector first(6);
    for (int i = 0; i < 6; ++i) {
      const double d = p.d[i];
      const double proj = x[i] == 0.0 ? std::clamp(-r[i], -d, d) : (x[i] > 0 ? d : -d);
      first[i] = r[i] + proj;
    }
    const Vector second = Eigen::MatrixXd(p.A) * x + (y - s.y) / s.penalties.beta - p.b;
    const double expect = std::sqrt(first.squaredNorm() + second.squaredNorm());
    EXPECT_NEAR(pmm::dist_F(x, y, s, p), expect, 1e-12 * (1.0 + expect));
  }
}

TEST(UpdateZ, InteriorWithZeroAnchorIsZero) {
  const Problem p = scalar(1, 0, 0, -2, 1.5);
  pmm::PmmState s;
  s.x = vec({0});
  s.y = Vector(0);
  s.z = vec({0});
  s.penalties = pmm::PenaltyState::initial(100, 500);
  EXPECT_EQ(pmm::update_z(vec({0.7}), s, p)[0], 0.0);
}

TEST(UpdateZ, HandValueAboveUpperBound) {
  const Problem p = scalar(1, 0, 0, -2, 1.5);
  pmm::PmmState s;
  s.x = vec({0});
  s.y = Vector(0);
  s.z = vec({0});
  s.penalties = pmm::PenaltyState::initial(1, 1);
  EXPECT_DOUBLE_EQ(pmm::update_z(vec({3.0}), s, p)[0], 1.5);
}

TEST(UpdateZ, AgreesWithConjugateProx) {
  std::mt19937_64 rng(36);
  for (int t = 0; t < 1000; ++t) {
    const Problem p = oracle::random_qp(rng, {4, 0, 0.1, 0.3, true});
    const double beta = std::pow(10.0, static_cast<double>(t % 9) - 2);
    pmm::PmmState s = random_state(rng, p, beta, 1.0);
    s.z *= beta;
    const Vector x = oracle::random_vector(rng, 4, -3, 3);
    const Vector a = pmm::update_z(x, s, p);
    const Vector b = prox::prox_conjugate_box(s.z + beta * x, beta, p.box());
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-14 * (1.0 + (s.z + beta * x).cwiseAbs().maxCoeff()));
  }
}

TEST(UpdateZ, SignStructure) {
  std::mt19937_64 rng(37);
  for (int t = 0; t < 300; ++t) {
    const Problem p = oracle::random_qp(rng, {6, 0, 0.1, 0.3, true});
    const pmm::PmmState s = random_state(rng, p, 2.0, 1.0);
    const Vector x = oracle::random_vector(rng, 6, -3, 3);
    const Vector z = pmm::update_z(x, s, p);
    for (int i = 0; i < 6; ++i) {
      const double w = s.z[i] / 2.0 + x[i];
      if (w <= p.l[i]) EXPECT_LE(z[i], 0.0);
      else if (w >= p.u[i]) EXPECT_GE(z[i], 0.0);
      else EXPECT_EQ(z[i], 0.0);
    }
  }
}

TEST(UpdatePenalties, FastBranch) {
  const pmm::PenaltyState s = pmm::PenaltyState::initial(100, 500);
  const Residuals prev{1.0, 1.0, 1.0};
  const Residuals now{0.05, 0.05, 0.05};
  const pmm::PenaltyState n = pmm::update_penalties(s, now, prev);
  EXPECT_DOUBLE_EQ(n.beta, 1000.0);
  EXPECT_DOUBLE_EQ(n.rho, 5000.0);
  EXPECT_DOUBLE_EQ(n.tau, 0.2);
}

TEST(UpdatePenalties, SlowBranch) {
  const pmm::PenaltyState s = pmm::PenaltyState::initial(100, 500);
  const Residuals r{0.3, 0.3, 0.3};
  const pmm::PenaltyState n = pmm::update_penalties(s, r, r);
  EXPECT_DOUBLE_EQ(n.beta, 200.0);
  EXPECT_DOUBLE_EQ(n.rho, 1000.0);
}

TEST(UpdatePenalties, BetaCapped) {
  pmm::PenaltyState s = pmm::PenaltyState::initial(1e10, 5e10);
  const pmm::PenaltyState n = pmm::update_penalties(s, {0.01, 0.01, 0}, {1, 1, 0});
  EXPECT_EQ(n.beta, 1e10);
  EXPECT_NEAR(n.rho, n.beta / n.tau, 1e-6 * n.rho);
}

TEST(UpdatePenalties, MonotoneSequencesOverRandomHistories) {
  std::mt19937_64 rng(38);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int run = 0; run < 50; ++run) {
    pmm::PenaltyState s = pmm::PenaltyState::initial(100, 500);
    Residuals prev{1, 1, 1};
    for (int k = 0; k < 40; ++k) {
      const Residuals now{prev.dual * (U(rng) < 0.4 ? 0.1 : 0.9), prev.primal * (U(rng) < 0.4 ? 0.1 : 1.1), 0};
      const pmm::PenaltyState n = pmm::update_penalties(s, now, prev);
      EXPECT_GE(n.beta, s.beta);
      EXPECT_LE(n.beta, n.beta_max);
      EXPECT_LE(n.tau, s.tau);
      EXPECT_GE(n.tau, n.tau_min);
      EXPECT_NEAR(n.rho, n.beta / n.tau, 1e-12 * n.rho);
      s = n;
      prev = now;
    }
  }
}

TEST(EpsilonSchedule, FirstIterate) {
  const pmm::PenaltyState s = pmm::PenaltyState::initial(100, 500);
  EXPECT_NEAR(pmm::epsilon_schedule(0, 1e-8, 1e10, s), std::sqrt(0.2) / 100.0, 1e-15);
}

TEST(EpsilonSchedule, FloorForLargeK) {
  const pmm::PenaltyState s = pmm::PenaltyState::initial(100, 500);
  EXPECT_DOUBLE_EQ(pmm::epsilon_schedule(200, 1e-5, 1.0, s), 1e-6);
}

TEST(EpsilonSchedule, StepTermAndSummability) {
  const pmm::PenaltyState s = pmm::PenaltyState::initial(1, 1);
  EXPECT_DOUBLE_EQ(pmm::epsilon_schedule(2, 1e-12, 0.1, s), 0.125 * 0.1);
  double sum = 0.0;
  for (int k = 0; k < 60; ++k) sum += pmm::epsilon_schedule(k, 1e-300, kInf, s);
  EXPECT_NEAR(sum, 2.0, 1e-12);
}

TEST(Solve, UnconstrainedScalarQuadratic) {
  const Problem p = scalar(1.0, -1.0, 0.0, -kInf, kInf);
  const Solution s = pmm::solve(p);
  EXPECT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.x[0], 1.0, 1e-5);
  EXPECT_TRUE(kkt_residuals(p, s.x, s.y, s.z).within(1e-5));
}

TEST(Solve, TwoVariableInstanceMatchesOracle) {
  const Problem p = two_var();
  pmm::SolverConfig cfg;
  cfg.tol = 1e-9;
  const Solution s = pmm::solve(p, cfg);
  const oracle::Reference ref = oracle::admm_reference(p);
  EXPECT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_LE((s.x - ref.x).norm(), 1e-6);
  EXPECT_NEAR(s.x[0], 0.0, 1e-6);
  EXPECT_NEAR(s.x[1], 1.0, 1e-6);
}

TEST(Solve, RandomInstancesMatchOracleObjective) {
  std::mt19937_64 rng(39);
  for (int t = 0; t < 10; ++t) {
    const Problem p = oracle::random_qp(rng, {4 + t % 5, t % 3, 0.1, 0.3, true});
    const double tol = 1e-6;
    pmm::SolverConfig cfg;
    cfg.tol = tol;
    const Solution s = pmm::solve(p, cfg);
    ASSERT_EQ(s.status, SolveStatus::Optimal) << "instance " << t;
    EXPECT_TRUE(s.report.final_residuals.within(tol));
    const oracle::Reference ref = oracle::admm_reference(p, 200000);
    EXPECT_LE(std::abs(p.objective(s.x) - ref.objective), 10 * tol * (1.0 + std::abs(ref.objective)));
    const SolveReport& r = s.report;
    EXPECT_LE(r.factorizations, r.ssn_iters);
    if (r.minres_calls > 0) EXPECT_DOUBLE_EQ(r.minres_avg * r.minres_calls, static_cast<double>(r.minres_iters_total));
  }
}

TEST(Solve, PoissonGrid31ReachesTolerance) {
  gen::ControlInstanceSpec spec;
  spec.N = 31;
  spec.alpha1 = 1e-4;
  const Problem p = gen::generate(spec);
  const Solution s = pmm::solve(p);
  EXPECT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_TRUE(kkt_residuals(p, s.x, s.y, s.z).within(1e-5));
  EXPECT_LE(s.report.factorizations, s.report.ssn_iters);
}

TEST(Solve, DeterministicAcrossRuns) {
  std::mt19937_64 rng(40);
  const Problem p = oracle::random_qp(rng, {8, 3, 0.1, 0.3, true});
  const Solution a = pmm::solve(p), b = pmm::solve(p);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.z, b.z);
  EXPECT_EQ(a.report.ssn_iters, b.report.ssn_iters);
  EXPECT_EQ(a.report.minres_iters_total, b.report.minres_iters_total);
}

TEST(Solve, IterationCapReportsMaxIterations) {
  gen::ControlInstanceSpec spec;
  spec.N = 8;
  const Problem p = gen::generate(spec);
  pmm::SolverConfig cfg;
  cfg.max_pmm = 1;
  cfg.tol = 1e-12;
  const Solution s = pmm::solve(p, cfg);
  EXPECT_EQ(s.status, SolveStatus::MaxIterations);
  EXPECT_EQ(s.report.pmm_iters, 1);
}
