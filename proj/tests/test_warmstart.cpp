#include <gtest/gtest.h>

#include <random>

#include "oracle/oracle.hpp"
#include "ssnpmm/generators.hpp"
#include "ssnpmm/pmm.hpp"
#include "ssnpmm/warmstart.hpp"
#include "test_util.hpp"

using namespace ssnpmm;
using Dense = Eigen::MatrixXd;
using testutil::vec;

namespace {

warmstart::XyUpdate sequential_step(const warmstart::AdmmState& st, const Vector& w, const Problem& p) {
  const oracle::PadmmStep s = oracle::padmm_sequential_step(p, st.sigma, st.gamma, st.sigma_hat, st.x, st.y1, st.y2, w);
  warmstart::XyUpdate out;
  out.x = s.x;
  out.y1 = s.y1;
  out.y2 = s.y2;
  return out;
}

}  // namespace

TEST(SigmaHat, DiagonalQ) {
  EXPECT_DOUBLE_EQ(warmstart::choose_sigma_hat(testutil::sparse(Dense::Identity(4, 4) * 3.0)), 1e-8);
}

TEST(SigmaHat, TwoByTwo) {
  Dense Q(2, 2);
  Q << 2, 1, 1, 2;
  EXPECT_DOUBLE_EQ(warmstart::choose_sigma_hat(Q.sparseView()), 1.0 + 1e-8);
}

TEST(SigmaHat, ProximalTermIsPositiveDefinite) {
  std::mt19937_64 rng(71);
  for (int t = 0; t < 30; ++t) {
    const Problem p = oracle::random_qp(rng, {3 + t % 10, 0, 0.1, 0.3, true});
    const double sh = warmstart::choose_sigma_hat(p.Q);
    Dense R = -Dense(p.Q);
    R.diagonal().setConstant(sh);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Dense>(R).eigenvalues().minCoeff(), 0.0);
    const Vector v = oracle::random_vector(rng, p.n());
    EXPECT_LE((warmstart::apply_Rx(p.Q, sh, v) - R * v).norm(), 1e-13);
  }
}

TEST(WUpdate, SmoothFreeBoxIsShift) {
  std::mt19937_64 rng(72);
  Problem p = oracle::random_qp(rng, {5, 1, 0.1, 1.0, false});
  const Vector x = oracle::random_vector(rng, 5), y2 = oracle::random_vector(rng, 5);
  EXPECT_LE((warmstart::admm_w_update(x, y2, 2.0, p) - (x + y2 / 2.0)).norm(), 1e-15);
}

TEST(WUpdate, HandValue) {
  Problem p;
  p.Q = testutil::sparse(Dense::Identity(1, 1));
  p.A = SparseMatrix(0, 1);
  p.c = vec({0});
  p.b = Vector(0);
  p.d = vec({0.5});
  p.l = vec({-2});
  p.u = vec({1.5});
  EXPECT_DOUBLE_EQ(warmstart::admm_w_update(vec({2.0}), vec({0.0}), 1.0, p)[0], 1.5);
  EXPECT_EQ(warmstart::admm_w_update(vec({0.3}), vec({0.1}), 1.0, p)[0], 0.0);
  p.l = vec({0.25});
  EXPECT_EQ(warmstart::admm_w_update(vec({0.3}), vec({0.1}), 1.0, p)[0], 0.25);
}

TEST(XyUpdate, SatisfiesDualIdentities) {
  std::mt19937_64 rng(73);
  for (int t = 0; t < 20; ++t) {
    const Problem p = oracle::random_qp(rng, {4 + t % 4, 1 + t % 3, 0.1, 0.3, true});
    warmstart::AdmmState st = warmstart::make_state(p);
    st.x = oracle::random_vector(rng, p.n());
    st.y1 = oracle::random_vector(rng, p.m());
    st.y2 = oracle::random_vector(rng, p.n());
    const Vector w = warmstart::admm_w_update(st.x, st.y2, st.sigma, p);
    EXPECT_LE(warmstart::admm_xy_update(st, w, p).identity_defect, 1e-10);
  }
}

TEST(XyUpdate, MatchesSequentialFormulation) {
  std::mt19937_64 rng(74);
  for (int t = 0; t < 20; ++t) {
    const Problem p = oracle::random_qp(rng, {4 + t % 4, 1 + t % 3, 0.1, 0.3, true});
    warmstart::AdmmState st = warmstart::make_state(p);
    for (int it = 0; it < 5; ++it) {
      const Vector w = warmstart::admm_w_update(st.x, st.y2, st.sigma, p);
      const warmstart::XyUpdate a = warmstart::admm_xy_update(st, w, p);
      const warmstart::XyUpdate b = sequential_step(st, w, p);
      EXPECT_LE((a.x - b.x).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE((a.y1 - b.y1).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE((a.y2 - b.y2).cwiseAbs().maxCoeff(), 1e-10);
      st.w = w;
      st.x = a.x;
      st.y1 = a.y1;
      st.y2 = a.y2;
    }
  }
}

TEST(MergedMatrix, IsQuasiDefinite) {
  std::mt19937_64 rng(75);
  const Problem p = oracle::random_qp(rng, {6, 2, 0.1, 0.3, true});
  const double sh = warmstart::choose_sigma_hat(p.Q);
  const Dense K(warmstart::merged_matrix(p, 1.0, 1.618, sh));
  EXPECT_LE((K - K.transpose()).norm(), 0.0);
  EXPECT_LT(Eigen::SelfAdjointEigenSolver<Dense>(K.topLeftCorner(6, 6)).eigenvalues().maxCoeff(), 0.0);
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Dense>(K.bottomRightCorner(8, 8)).eigenvalues().minCoeff(), 0.0);
}

TEST(WarmStart, SingleFactorizationAcrossIterations) {
  gen::ControlInstanceSpec spec;
  spec.N = 6;
  const Problem p = gen::generate(spec);
  warmstart::AdmmState st = warmstart::make_state(p);
  const sparse::Factorization* f = st.kkt_factor.get();
  for (int it = 0; it < 400; ++it) {
    st.w = warmstart::admm_w_update(st.x, st.y2, st.sigma, p);
    warmstart::XyUpdate up = warmstart::admm_xy_update(st, st.w, p);
    st.x = up.x;
    st.y1 = up.y1;
    st.y2 = up.y2;
  }
  EXPECT_EQ(st.kkt_factor.get(), f);
  EXPECT_EQ(warmstart::warmstart_run(p, 1e-3, 400).factorizations, 1);
}

TEST(WarmStart, OptimalStartStopsImmediately) {
  // x = 0 is optimal: c = 0, b = 0, bounds containing 0.
  std::mt19937_64 rng(76);
  Problem p = oracle::random_qp(rng, {5, 2, 0.1, 0.3, true});
  p.c.setZero();
  p.b.setZero();
  p.l = p.l.cwiseMin(-0.5);
  p.u = p.u.cwiseMax(0.5);
  const warmstart::WarmStartResult r = warmstart::warmstart_run(p, 1e-3, 400);
  EXPECT_LE(r.iterations, 1);
  EXPECT_TRUE(r.converged);
}

TEST(WarmStart, ReachesThreeDigitsAndRecoversMultiplier) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 10; ++t) {
    const Problem p = oracle::random_qp(rng, {6, 2, 0.5, 0.3, true});
    const warmstart::WarmStartResult r = warmstart::warmstart_run(p, 1e-3, 5000);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.residuals.max(), 1e-3);
    // Replay the deterministic iteration and check y2 - z lies in the subdifferential at w.
    warmstart::AdmmState st = warmstart::make_state(p);
    warmstart::AdmmState best = st;
    double best_r = warmstart::admm_residuals(st, p).max();
    for (int it = 0; it < r.iterations; ++it) {
      st.w = warmstart::admm_w_update(st.x, st.y2, st.sigma, p);
      const warmstart::XyUpdate up = warmstart::admm_xy_update(st, st.w, p);
      st.x = up.x;
      st.y1 = up.y1;
      st.y2 = up.y2;
      const double rr = warmstart::admm_residuals(st, p).max();
      if (rr < best_r) best = st, best_r = rr;
    }
    EXPECT_EQ(best.x, r.x0);
    EXPECT_EQ(best.y1, r.y0);
    const Vector s = best.y2 - r.z0;
    for (Eigen::Index i = 0; i < p.n(); ++i) {
      const double d = p.d[i];
      if (d == 0.0) EXPECT_EQ(s[i], 0.0);
      else if (best.w[i] == 0.0) EXPECT_LE(std::abs(s[i]), d * (1 + 1e-15));
      else EXPECT_DOUBLE_EQ(s[i], best.w[i] > 0 ? d : -d);
    }
  }
}

TEST(WarmStart, SmoothCaseMultiplierIsDualOfSplitting) {
  std::mt19937_64 rng(78);
  Problem p = oracle::random_qp(rng, {6, 2, 0.5, 0.3, true});
  p.d.setZero();
  const warmstart::WarmStartResult r = warmstart::warmstart_run(p, 1e-3, 400);
  // With d = 0, z0 = y2, so the dual residual c + Qx - A'y + z is the pADMM dual residual.
  const double dual = (p.c + p.Q * r.x0 - p.A.transpose() * r.y0 + r.z0).norm() / (1.0 + p.c.norm());
  EXPECT_NEAR(dual, r.residuals.dual, 1e-12);
}

TEST(WarmStart, ReportedOnControlInstance) {
  gen::ControlInstanceSpec spec;
  spec.N = 16;
  spec.alpha1 = 1e-3;
  const Problem p = gen::generate(spec);
  pmm::SolverConfig warm, cold;
  cold.warmstart = false;
  const Solution a = pmm::solve(p, warm);
  const Solution b = pmm::solve(p, cold);
  EXPECT_EQ(a.status, SolveStatus::Optimal);
  EXPECT_EQ(b.status, SolveStatus::Optimal);
  EXPECT_TRUE(a.report.warmstart_used);
  EXPECT_FALSE(b.report.warmstart_used);
}

TEST(WarmStart, FewerOuterIterationsOverRandomFamily) {
  std::mt19937_64 rng(79);
  int warm_total = 0, cold_total = 0;
  for (int t = 0; t < 60; ++t) {
    const Problem p = oracle::random_qp(rng, {4 + t % 7, 1 + t % 3, 0.3, 0.5, true});
    pmm::SolverConfig warm, cold;
    warm.tol = cold.tol = 1e-8;
    cold.warmstart = false;
    const Solution a = pmm::solve(p, warm);
    const Solution b = pmm::solve(p, cold);
    ASSERT_EQ(a.status, SolveStatus::Optimal) << t;
    ASSERT_EQ(b.status, SolveStatus::Optimal) << t;
    warm_total += a.report.pmm_iters;
    cold_total += b.report.pmm_iters;
  }
  EXPECT_LT(warm_total, cold_total);
}
