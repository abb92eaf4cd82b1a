#pragma once

#include <memory>

#include "ssnpmm/problem.hpp"
#include "ssnpmm/sparse.hpp"

namespace ssnpmm::warmstart {

/// max_i sum_{j != i} |Q_ij| + 1e-8, so that sigma_hat I - Off(Q) is positive definite.
double choose_sigma_hat(const SparseMatrix& Q);

/// R_x v = sigma_hat v - Off(Q) v.
Vector apply_Rx(const SparseMatrix& Q, double sigma_hat, const Vector& v);

struct AdmmState {
  Vector x, w, y1, y2;
  double sigma = 1.0;
  double gamma = 1.618;
  double sigma_hat = 0.0;
  std::shared_ptr<const sparse::Factorization> kkt_factor;
};

/// Zero iterate for `p` with the merged system factored once.
AdmmState make_state(const Problem& p, double sigma = 1.0, double gamma = 1.618);

/// The symmetric quasi-definite matrix
///   [ -gamma (Diag(Q) + sigma_hat I)   A'                 -I               ]
///   [  A                               I/(gamma sigma)     0               ]
///   [ -I                               0                   I/(gamma sigma) ]
SparseMatrix merged_matrix(const Problem& p, double sigma, double gamma, double sigma_hat);

/// Pi_K(soft(x + y2/sigma, 1/sigma, d)).
Vector admm_w_update(const Vector& x, const Vector& y2, double sigma, const Problem& p);

struct XyUpdate {
  Vector x, y1, y2;
  /// max deviation from y1 = y1_k - gamma sigma (Ax - b), y2 = y2_k - gamma sigma (w - x).
  double identity_defect = 0.0;
};

/// x-minimisation of the proximal augmented Lagrangian merged with both dual updates.
XyUpdate admm_xy_update(const AdmmState& st, const Vector& w_next, const Problem& p);

struct AdmmResiduals {
  double dual = 0.0;    ///< ||c + Qx - A'y1 + y2|| / (1 + ||c||)
  double primal = 0.0;  ///< ||(Ax - b, w - x)|| / (1 + ||b||)
  double comp = 0.0;    ///< ||w - Pi_K(soft(w + y2, 1, d))|| / (1 + ||w|| + ||y2||)
  double max() const;
};

AdmmResiduals admm_residuals(const AdmmState& st, const Problem& p);

struct WarmStartResult {
  Vector x0, y0, z0;
  int iterations = 0;
  bool converged = false;
  int factorizations = 0;
  AdmmResiduals residuals;
};

/// Runs pADMM from zero until all residuals drop below tol or max_iters is reached,
/// returning (x, y1, y2 - Pi_{dg(w)}(y2)) of the best iterate seen.
WarmStartResult warmstart_run(const Problem& p, double tol = 1e-3, int max_iters = 400);

}  // namespace ssnpmm::warmstart
