#include "ssnpmm/pmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssnpmm::pmm {

PenaltyState PenaltyState::initial(double beta0, double rho0) {
  PenaltyState s;
  s.beta = beta0;
  s.rho = rho0;
  s.tau = beta0 / rho0;
  return s;
}

Vector shifted_box_term(const Vector& x, const Vector& z_anchor, double beta, const prox::BoxSet& box) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double w = z_anchor[i] / beta + x[i];
    if (w >= box.upper[i]) {
      out[i] = z_anchor[i] + beta * (x[i] - box.upper[i]);
    } else if (w <= box.lower[i]) {
      out[i] = z_anchor[i] + beta * (x[i] - box.lower[i]);
    } else {
      out[i] = 0.0;
    }
  }
  return out;
}

Vector residual_r(const Vector& x, const Vector& y, const PmmState& s, const Problem& p) {
  const PenaltyState& pen = s.penalties;
  return p.c + p.Q * x - p.A.transpose() * y + shifted_box_term(x, s.z, pen.beta, p.box()) +
         (x - s.x) / pen.rho;
}

Vector dual_block(const Vector& x, const Vector& y, const PmmState& s, const Problem& p) {
  return p.A * x + (y - s.y) / s.penalties.beta - p.b;
}

double dist_F(const Vector& x, const Vector& y, const PmmState& s, const Problem& p) {
  const Vector r = residual_r(x, y, s, p);
  const Vector first = r + prox::project_subdiff_g(-r, x, p.d);
  return std::sqrt(first.squaredNorm() + dual_block(x, y, s, p).squaredNorm());
}

Vector update_z(const Vector& x_next, const PmmState& s, const Problem& p) {
  return shifted_box_term(x_next, s.z, s.penalties.beta, p.box());
}

PenaltyState update_penalties(const PenaltyState& s, const Residuals& now, const Residuals& prev,
                              const PenaltyPolicy& policy) {
  auto decreased = [&](double cur, double old) { return cur * policy.decrease_ratio <= old; };
  const double beta_factor = decreased(now.primal, prev.primal) ? policy.fast_factor : policy.slow_factor;
  const double rho_factor = decreased(now.dual, prev.dual) ? policy.fast_factor : policy.slow_factor;

  PenaltyState next = s;
  next.beta = std::min(s.beta * beta_factor, s.beta_max);
  const double rho_raw = s.rho * rho_factor;
  next.tau = std::clamp(next.beta / rho_raw, s.tau_min, std::max(s.tau, s.tau_min));
  next.rho = next.beta / next.tau;
  return next;
}

double epsilon_schedule(int k, double tol, double step, const PenaltyState& s, double delta0) {
  const double delta = delta0 * std::pow(0.5, k);
  const double delta_prime = std::pow(0.5, k + 1);
  const double scale = std::min(std::sqrt(s.tau), 1.0) / s.beta;
  return std::max(scale * std::min(delta, delta_prime * step), 0.1 * tol);
}

Vector column_sq_norms(const SparseMatrix& A) {
  Vector out = Vector::Zero(A.cols());
  for (Eigen::Index j = 0; j < A.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(A, j); it; ++it) out[it.col()] += it.value() * it.value();
  return out;
}

double curvature_zeta(const Problem& p, const Vector& col_sq, const PenaltyState& s) {
  double cmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < p.n(); ++i)
    if (p.d[i] > 0.0) cmin = std::min(cmin, p.Q.coeff(i, i) + 1.0 / s.rho + s.beta * col_sq[i]);
  return std::isfinite(cmin) ? 1.0 / cmin : 1.0;
}

}  // namespace ssnpmm::pmm
