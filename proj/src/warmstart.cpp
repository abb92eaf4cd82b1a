#include "ssnpmm/warmstart.hpp"

#include <algorithm>
#include <cmath>

namespace ssnpmm::warmstart {

double choose_sigma_hat(const SparseMatrix& Q) {
  Vector off = Vector::Zero(Q.rows());
  for (int k = 0; k < Q.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(Q, k); it; ++it)
      if (it.row() != it.col()) off[it.row()] += std::abs(it.value());
  return (off.size() > 0 ? off.maxCoeff() : 0.0) + 1e-8;
}

Vector apply_Rx(const SparseMatrix& Q, double sigma_hat, const Vector& v) {
  const Vector diagQ = Q.diagonal();
  return sigma_hat * v - (Q * v - diagQ.cwiseProduct(v));
}

SparseMatrix merged_matrix(const Problem& p, double sigma, double gamma, double sigma_hat) {
  const int n = static_cast<int>(p.n());
  const int m = static_cast<int>(p.m());
  const double inv = 1.0 / (gamma * sigma);
  const Vector diagQ = p.Q.diagonal();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(4 * n + m + 2 * p.A.nonZeros()));
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, -gamma * (diagQ[i] + sigma_hat));
    t.emplace_back(n + m + i, i, -1.0);
    t.emplace_back(i, n + m + i, -1.0);
    t.emplace_back(n + m + i, n + m + i, inv);
  }
  for (int k = 0; k < p.A.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(p.A, k); it; ++it) {
      t.emplace_back(n + static_cast<int>(it.row()), k, it.value());
      t.emplace_back(k, n + static_cast<int>(it.row()), it.value());
    }
  for (int j = 0; j < m; ++j) t.emplace_back(n + j, n + j, inv);
  SparseMatrix K(2 * n + m, 2 * n + m);
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

AdmmState make_state(const Problem& p, double sigma, double gamma) {
  AdmmState st;
  st.x = Vector::Zero(p.n());
  st.w = Vector::Zero(p.n());
  st.y1 = Vector::Zero(p.m());
  st.y2 = Vector::Zero(p.n());
  st.sigma = sigma;
  st.gamma = gamma;
  st.sigma_hat = choose_sigma_hat(p.Q);
  st.kkt_factor = std::make_shared<const sparse::Factorization>(
      sparse::factorize_quasidef(merged_matrix(p, sigma, gamma, st.sigma_hat)));
  return st;
}

Vector admm_w_update(const Vector& x, const Vector& y2, double sigma, const Problem& p) {
  return prox::project_box(prox::soft_threshold(x + y2 / sigma, 1.0 / sigma, p.d), p.box());
}

XyUpdate admm_xy_update(const AdmmState& st, const Vector& w_next, const Problem& p) {
  const Eigen::Index n = p.n();
  const Eigen::Index m = p.m();
  const double gs = st.gamma * st.sigma;
  Vector rhs(2 * n + m);
  rhs.head(n) = st.gamma * (p.c - apply_Rx(p.Q, st.sigma_hat, st.x)) +
                (1.0 - st.gamma) * (p.A.transpose() * st.y1 - st.y2);
  rhs.segment(n, m) = p.b + st.y1 / gs;
  rhs.tail(n) = st.y2 / gs - w_next;
  const Vector sol = st.kkt_factor->solve(rhs);

  XyUpdate out;
  out.x = sol.head(n);
  out.y1 = sol.segment(n, m);
  out.y2 = sol.tail(n);
  const Vector e1 = out.y1 - (st.y1 - gs * (p.A * out.x - p.b));
  const Vector e2 = out.y2 - (st.y2 - gs * (w_next - out.x));
  out.identity_defect = std::max(e1.size() ? e1.lpNorm<Eigen::Infinity>() : 0.0,
                                 e2.size() ? e2.lpNorm<Eigen::Infinity>() : 0.0);
  return out;
}

double AdmmResiduals::max() const { return std::max({dual, primal, comp}); }

AdmmResiduals admm_residuals(const AdmmState& st, const Problem& p) {
  AdmmResiduals r;
  r.dual = (p.c + p.Q * st.x - p.A.transpose() * st.y1 + st.y2).norm() / (1.0 + p.c.norm());
  r.primal = std::sqrt((p.A * st.x - p.b).squaredNorm() + (st.w - st.x).squaredNorm()) / (1.0 + p.b.norm());
  const Vector proj = prox::project_box(prox::soft_threshold(st.w + st.y2, 1.0, p.d), p.box());
  r.comp = (st.w - proj).norm() / (1.0 + st.w.norm() + st.y2.norm());
  return r;
}

WarmStartResult warmstart_run(const Problem& p, double tol, int max_iters) {
  AdmmState st = make_state(p);
  WarmStartResult res;
  res.factorizations = 1;

  AdmmState best = st;
  AdmmResiduals best_r = admm_residuals(st, p);
  AdmmResiduals r = best_r;
  int it = 0;
  while (r.max() > tol && it < max_iters) {
    st.w = admm_w_update(st.x, st.y2, st.sigma, p);
    XyUpdate up = admm_xy_update(st, st.w, p);
    st.x = std::move(up.x);
    st.y1 = std::move(up.y1);
    st.y2 = std::move(up.y2);
    ++it;
    r = admm_residuals(st, p);
    if (r.max() < best_r.max()) {
      best = st;
      best_r = r;
    }
  }
  res.iterations = it;
  res.converged = best_r.max() <= tol;
  res.residuals = best_r;
  res.x0 = best.x;
  res.y0 = best.y1;
  res.z0 = best.y2 - prox::project_subdiff_g(best.y2, best.w, p.d);
  return res;
}

}  // namespace ssnpmm::warmstart
