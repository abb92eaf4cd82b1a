#pragma once

#include <cstdint>
#include <limits>

#include "ssnpmm/problem.hpp"

namespace ssnpmm::pmm {

/// Penalties of the proximal method of multipliers.
///
/// Invariants: rho == beta / tau, tau is non-increasing and stays >= tau_min,
/// beta is non-decreasing and stays <= beta_max.
struct PenaltyState {
  double beta = 1e2;
  double rho = 5e2;
  double tau = 0.2;
  double zeta = 1.0;
  double beta_max = 1e10;
  double tau_min = 1e-6;
  double eps_k = 0.0;

  static PenaltyState initial(double beta0, double rho0);
};

/// Anchor point (x_k, y_k, z_k) of one outer iteration together with its penalties.
struct PmmState {
  int k = 0;
  Vector x;
  Vector y;
  Vector z;
  PenaltyState penalties;
};

/// Growth factors of the penalty policy.
struct PenaltyPolicy {
  double fast_factor = 10.0;
  double slow_factor = 2.0;
  /// A residual counts as "sufficiently decreased" when it dropped by at least this ratio.
  double decrease_ratio = 5.0;
};

/// (z_k + beta x) - beta Pi_K(z_k / beta + x), computed branchwise so that
/// interior components are exact zeros and boundary components avoid the
/// cancellation in beta * x.
Vector shifted_box_term(const Vector& x, const Vector& z_anchor, double beta, const prox::BoxSet& box);

/// r(x, y) = c + Qx - A'y + (z_k + beta x) - beta Pi_K(z_k/beta + x) + (x - x_k)/rho.
Vector residual_r(const Vector& x, const Vector& y, const PmmState& s, const Problem& p);

/// Ax + (y - y_k)/beta - b.
Vector dual_block(const Vector& x, const Vector& y, const PmmState& s, const Problem& p);

/// dist(0, F(x, y)) = ||(r + Pi_{dg(x)}(-r), Ax + (y - y_k)/beta - b)||.
double dist_F(const Vector& x, const Vector& y, const PmmState& s, const Problem& p);

/// z_{k+1} = (z_k + beta x_{k+1}) - beta Pi_K(z_k/beta + x_{k+1}).
Vector update_z(const Vector& x_next, const PmmState& s, const Problem& p);

PenaltyState update_penalties(const PenaltyState& s, const Residuals& now, const Residuals& prev,
                              const PenaltyPolicy& policy = {});

/// Inexactness target for sub-problem k:
///   max( min(sqrt(tau),1)/beta * min(delta0 0.5^k, 0.5^(k+1) step), 0.1 tol ).
/// `step` is the last outer step measured in the R_k = tau I + I + I norm.
double epsilon_schedule(int k, double tol, double step, const PenaltyState& s, double delta0 = 1.0);

/// Column norms ||A_{:,i}||^2.
Vector column_sq_norms(const SparseMatrix& A);

/// 1 / min over i with d_i > 0 of (Q_ii + 1/rho + beta ||A_{:,i}||^2), or 1 when d = 0.
double curvature_zeta(const Problem& p, const Vector& col_sq, const PenaltyState& s);

enum class ZetaRule { Fixed, Curvature };

struct SolverConfig {
  double tol = 1e-5;
  int max_pmm = 200;
  int max_ssn_per_subproblem = 8;
  int minres_maxit = 200;
  bool warmstart = true;
  double warmstart_tol = 1e-3;
  int warmstart_maxit = 400;
  double beta0 = 1e2;
  double rho0 = 5e2;
  double beta_max = 1e10;
  double tau_min = 1e-6;
  ZetaRule zeta_rule = ZetaRule::Curvature;
  /// Used when zeta_rule == Fixed.
  double zeta = 1.0;
  std::uint64_t seed = 0;
};

/// Runs the warm start (unless disabled) and then the outer proximal method of
/// multipliers until the scaled residuals drop below cfg.tol.
Solution solve(const Problem& p, const SolverConfig& cfg = {});

}  // namespace ssnpmm::pmm
