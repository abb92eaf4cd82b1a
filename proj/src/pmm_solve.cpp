#include <chrono>
#include <cmath>
#include <limits>

#include "ssnpmm/errors.hpp"
#include "ssnpmm/pmm.hpp"
#include "ssnpmm/precond.hpp"
#include "ssnpmm/ssn.hpp"
#include "ssnpmm/warmstart.hpp"

namespace ssnpmm::pmm {

Solution solve(const Problem& p, const SolverConfig& cfg) {
  validate(p);
  const auto t0 = std::chrono::steady_clock::now();
  Solution sol;
  SolveReport& rep = sol.report;

  PmmState s;
  s.penalties = PenaltyState::initial(cfg.beta0, cfg.rho0);
  s.penalties.beta_max = cfg.beta_max;
  s.penalties.tau_min = cfg.tau_min;

  precond::PreconditionerCache cache;
  try {
    if (cfg.warmstart) {
      const warmstart::WarmStartResult ws = warmstart::warmstart_run(p, cfg.warmstart_tol, cfg.warmstart_maxit);
      s.x = ws.x0;
      s.y = ws.y0;
      s.z = ws.z0;
      rep.warmstart_used = true;
      rep.warmstart_iters = ws.iterations;
      rep.warmstart_converged = ws.converged;
    } else {
      s.x = Vector::Zero(p.n());
      s.y = Vector::Zero(p.m());
      s.z = Vector::Zero(p.n());
    }

    ssn::SsnConfig ssn_cfg;
    ssn_cfg.max_iters = cfg.max_ssn_per_subproblem;
    ssn_cfg.minres_maxit = cfg.minres_maxit;

    const Vector col_sq = column_sq_norms(p.A);
    Residuals res = kkt_residuals(p, s.x, s.y, s.z);
    double step = std::numeric_limits<double>::infinity();
    sol.status = SolveStatus::MaxIterations;
    for (;;) {
      if (res.within(cfg.tol)) {
        sol.status = SolveStatus::Optimal;
        break;
      }
      if (s.k >= cfg.max_pmm) break;

      s.penalties.zeta = cfg.zeta_rule == ZetaRule::Fixed ? cfg.zeta : curvature_zeta(p, col_sq, s.penalties);
      s.penalties.eps_k = epsilon_schedule(s.k, cfg.tol, step, s.penalties);
      const ssn::SsnResult sr = ssn::ssn_solve(s, p, s.penalties.eps_k, ssn_cfg, cache);
      rep.ssn_iters += sr.iterations;
      rep.minres_calls += sr.minres_calls;
      rep.minres_iters_total += sr.minres_iterations;
      rep.minres_not_converged += sr.minres_not_converged;
      rep.linesearch_failures += sr.linesearch_failures;
      if (!sr.converged) ++rep.ssn_cap_hits;

      const Vector z_next = update_z(sr.x, s, p);
      step = std::sqrt(s.penalties.tau * (sr.x - s.x).squaredNorm() + (sr.y - s.y).squaredNorm() +
                       (z_next - s.z).squaredNorm());
      s.x = sr.x;
      s.y = sr.y;
      s.z = z_next;
      ++s.k;

      const Residuals next = kkt_residuals(p, s.x, s.y, s.z);
      s.penalties = update_penalties(s.penalties, next, res);
      res = next;
    }
    rep.final_residuals = res;
  } catch (const NotPositiveDefinite&) {
    sol.status = SolveStatus::LinearSolverFailure;
  } catch (const FactorizationBreakdown&) {
    sol.status = SolveStatus::LinearSolverFailure;
  } catch (const PreconditionerBreakdown&) {
    sol.status = SolveStatus::LinearSolverFailure;
  }

  rep.pmm_iters = s.k;
  rep.factorizations = cache.factorizations();
  rep.minres_avg = rep.minres_calls > 0 ? static_cast<double>(rep.minres_iters_total) / rep.minres_calls : 0.0;
  sol.x = s.x.size() == p.n() ? s.x : Vector::Zero(p.n());
  sol.y = s.y.size() == p.m() ? s.y : Vector::Zero(p.m());
  sol.z = s.z.size() == p.n() ? s.z : Vector::Zero(p.n());
  if (sol.status == SolveStatus::LinearSolverFailure) rep.final_residuals = kkt_residuals(p, sol.x, sol.y, sol.z);
  rep.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

}  // namespace ssnpmm::pmm
