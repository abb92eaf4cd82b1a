#pragma once

#include <vector>

#include "ssnpmm/pmm.hpp"
#include "ssnpmm/sparse.hpp"

namespace ssnpmm::precond {
class PreconditionerCache;
}

namespace ssnpmm::ssn {

/// Jacobian selections. b_mask marks z_k/beta + x strictly inside the box,
/// bhat_mask marks |u_hat| > zeta d or d == 0; bhat_indices lists the set
/// bhat in increasing index order and defines the reduced ordering.
struct ActiveSets {
  Mask b_mask;
  Mask bhat_mask;
  std::vector<int> bhat_indices;
  std::vector<int> nhat_indices;
};

struct NaturalMap {
  Vector F;       ///< (x - prox(u_hat), zeta (Ax + (y - y_k)/beta - b))
  Vector u_hat;   ///< x - zeta r(x, y)
  Vector prox_u;  ///< prox_{zeta g}(u_hat)
};

NaturalMap natural_map(const Vector& x, const Vector& y, const pmm::PmmState& s, const Problem& p);

/// Merit function ||F_hat||^2.
double merit(const Vector& x, const Vector& y, const pmm::PmmState& s, const Problem& p);

ActiveSets build_active_sets(const Vector& x, const Vector& z_anchor, const Vector& u_hat,
                             const pmm::PmmState& s, const Problem& p);

/// diag(H) = diag(Q) + beta + 1/rho - beta * B over all n coordinates.
Vector hessian_diagonal(const Problem& p, const ActiveSets& sets, const pmm::PenaltyState& pen);

/// Reduced saddle-point system
///   [ -H_(B,B)   A_B'      ] [dx_B]   [ (x - prox(u_hat))_B / zeta + H_(B,N) dx_N  ]
///   [  A_B       I / beta  ] [dy  ] = [ b - Ax - (y - y_k)/beta - A_N dx_N         ]
/// after eliminating dx_N = -(x - prox(u_hat))_N.
class NewtonSystem {
 public:
  NewtonSystem(const Problem& p, const pmm::PmmState& s, ActiveSets sets, const Vector& x, const Vector& y,
               const NaturalMap& nm);

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(sets_.bhat_indices.size()) + p_->m(); }
  const ActiveSets& sets() const { return sets_; }
  const Vector& rhs() const { return rhs_; }
  /// Eliminated components dx_N, stored as a full-length vector (zero on bhat).
  const Vector& dx_eliminated() const { return dx_n_; }

  Vector apply(const Vector& v) const;
  /// Dense copy of the reduced matrix (small problems and tests).
  Eigen::MatrixXd dense() const;

  struct Step {
    Vector dx;
    Vector dy;
  };
  /// Back-substitution: scatters the reduced solution and restores dx_N.
  Step expand(const Vector& reduced) const;

 private:
  Vector scatter_bhat(const Vector& v_b) const;

  const Problem* p_;
  double beta_;
  ActiveSets sets_;
  Vector diag_shift_;  ///< (beta + 1/rho - beta B_i) for every i
  Vector dx_n_;
  Vector rhs_;
};

/// Full (unreduced) Newton matrix applied to (dx, dy):
///   [(I - Bhat) dx + zeta Bhat (H dx - A'dy);  zeta (A dx + dy/beta)].
Vector apply_jacobian(const Problem& p, const pmm::PmmState& s, const ActiveSets& sets, const Vector& dx,
                      const Vector& dy);

/// Minimiser over [0, 1] of Theta(alpha) = ||F_hat(x + alpha dx, y + alpha dy)||^2.
/// Along a ray every component of F_hat is piecewise linear (kinks where the box
/// term switches or u_hat crosses +-zeta d), so Theta is piecewise quadratic and
/// a sweep over the sorted kinks finds the exact minimiser.
double ray_minimizer(const Vector& x, const Vector& y, const Vector& dx, const Vector& dy, const pmm::PmmState& s,
                     const Problem& p);

enum class LineSearch {
  Armijo,    ///< alpha = delta^m, first m passing the sufficient-decrease test
  Piecewise  ///< ray_minimizer, falling back to Armijo if the test fails there
};

struct SsnConfig {
  double eta1 = 0.1;
  double eta2 = 0.5;
  double mu = 1e-4;
  double delta = 0.5;
  int max_iters = 8;
  int max_linesearch = 30;
  int minres_maxit = 200;
  LineSearch line_search = LineSearch::Piecewise;
  /// Take the first Newton step without line search.
  bool first_step_full = true;
};

struct StepRecord {
  double alpha = 1.0;
  double merit_before = 0.0;
  double merit_after = 0.0;
  bool line_search = false;
  bool line_search_failed = false;
  int minres_iterations = 0;
  double linear_residual = 0.0;    ///< ||M d + F_hat|| on the full system
  double linear_tolerance = 0.0;   ///< min(eta1, ||F_hat||^(1+eta2))
};

struct SsnResult {
  Vector x;
  Vector y;
  int iterations = 0;
  bool converged = false;  ///< dist_F <= eps at the returned point
  double dist = 0.0;
  int minres_calls = 0;
  long minres_iterations = 0;
  int minres_not_converged = 0;
  int linesearch_failures = 0;
  std::vector<StepRecord> steps;
};

/// Semismooth Newton on the natural map of sub-problem `s`. Returns the first iterate
/// with dist_F <= eps; after cfg.max_iters steps without success, the iterate with
/// the smallest dist_F seen (possibly the anchor itself).
SsnResult ssn_solve(const pmm::PmmState& s, const Problem& p, double eps, const SsnConfig& cfg,
                    precond::PreconditionerCache& cache);

}  // namespace ssnpmm::ssn
