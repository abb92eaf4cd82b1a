#include "ssnpmm/precond.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "ssnpmm/errors.hpp"

namespace ssnpmm::precond {

Vector build_E(const ssn::ActiveSets& sets, const Vector& diag_H_bhat) {
  Vector E(diag_H_bhat.size());
  for (Eigen::Index k = 0; k < E.size(); ++k) {
    const int i = sets.bhat_indices[static_cast<std::size_t>(k)];
    E[k] = sets.b_mask[i] ? 1.0 / diag_H_bhat[k] : 0.0;
  }
  return E;
}

Vector Preconditioner::apply_inverse(const Vector& v) const {
  const Eigen::Index nb = diag_H_inv.size();
  Vector out(v.size());
  out.head(nb) = v.head(nb).cwiseProduct(diag_H_inv);
  if (schur_factor) out.tail(v.size() - nb) = schur_factor->solve(v.tail(v.size() - nb));
  return out;
}

namespace {

Vector gather(const Vector& full, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = full[idx[k]];
  return out;
}

/// A_B E A_B' + I/beta assembled from the columns of A with E_k != 0.
SparseMatrix schur_approximation(const SparseMatrix& A, const std::vector<int>& bhat, const Vector& E,
                                 double beta) {
  const Eigen::Index m = A.rows();
  std::vector<Triplet> trips;
  Eigen::Index cols = 0;
  for (std::size_t k = 0; k < bhat.size(); ++k) {
    const double e = E[static_cast<Eigen::Index>(k)];
    if (e == 0.0) continue;
    const double s = std::sqrt(e);
    for (SparseMatrix::InnerIterator it(A, bhat[k]); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(cols), s * it.value());
    ++cols;
  }
  SparseMatrix G(m, cols);
  G.setFromTriplets(trips.begin(), trips.end());
  SparseMatrix S = G * G.transpose();
  SparseMatrix I(m, m);
  I.setIdentity();
  S += I / beta;
  S.makeCompressed();
  return S;
}

}  // namespace

const Preconditioner& build_preconditioner(const Problem& p, const ssn::ActiveSets& sets,
                                           const pmm::PenaltyState& pen, PreconditionerCache& cache) {
  const Vector diag_H = gather(ssn::hessian_diagonal(p, sets, pen), sets.bhat_indices);
  Preconditioner::Fingerprint fp{sets.b_mask, sets.bhat_mask, pen.beta};

  if (cache.current_ && cache.current_->fingerprint == fp) return *cache.current_;

  Preconditioner P;
  P.diag_H_inv = diag_H.cwiseInverse();
  P.beta = pen.beta;
  P.fingerprint = std::move(fp);
  if (p.m() > 0) {
    const SparseMatrix S = schur_approximation(p.A, sets.bhat_indices, build_E(sets, diag_H), pen.beta);
    P.schur_factor = std::make_shared<const sparse::Factorization>(sparse::factorize_spd(S));
    ++cache.factorizations_;
  }
  cache.current_ = std::move(P);
  return *cache.current_;
}

SpectralReport spectral_diagnostic(const Problem& p, const ssn::ActiveSets& sets, const pmm::PenaltyState& pen,
                                   double schur_slack, double interval_slack) {
  using Dense = Eigen::MatrixXd;
  const auto& idx = sets.bhat_indices;
  const Eigen::Index nb = static_cast<Eigen::Index>(idx.size());
  const Eigen::Index m = p.m();
  if (nb + m > kSpectralSizeLimit)
    throw TooLarge("spectral diagnostic: reduced dimension " + std::to_string(nb + m) + " exceeds " +
                   std::to_string(kSpectralSizeLimit));

  SpectralReport rep;
  rep.bhat_size = nb;
  rep.m = m;

  const Dense Qd = Dense(p.Q);
  const Dense Ad = Dense(p.A);
  const Vector shift = ssn::hessian_diagonal(p, sets, pen) - Vector(p.Q.diagonal());
  Dense H(nb, nb);
  Dense AB(m, nb);
  for (Eigen::Index a = 0; a < nb; ++a) {
    for (Eigen::Index b = 0; b < nb; ++b) H(a, b) = Qd(idx[a], idx[b]);
    H(a, a) += shift[idx[a]];
    AB.col(a) = Ad.col(idx[a]);
  }
  const Vector Ht = H.diagonal();
  const Vector E = build_E(sets, Ht);

  rep.sigma_max_A = m > 0 && p.n() > 0 ? Eigen::JacobiSVD<Dense>(Ad).singularValues()(0) : 0.0;
  rep.schur_bound = {1.0, 1.0 + rep.sigma_max_A * rep.sigma_max_A / (1.0 + pen.tau / (pen.beta * pen.beta))};

  // S~ = U diag(s^2) U' from the SVD of [A_B E^(1/2), beta^(-1/2) I]; T = diag(1/s) U' gives
  // T S~ T' = I without forming S~ or inverting a Cholesky factor. The dropped part
  // A_N D_N A_N' enters through G = T A_N D_N^(1/2), so eig(S~^-1 S^) = 1 + sigma(G)^2.
  Dense W(m, nb + m);
  W.leftCols(nb) = AB * E.cwiseSqrt().asDiagonal();
  W.rightCols(m) = Dense::Identity(m, m) / std::sqrt(pen.beta);
  Dense T(m, m);
  if (m > 0) {
    const Eigen::BDCSVD<Dense> svd(W, Eigen::ComputeFullU);
    const Vector sv = svd.singularValues();
    if (!(sv.minCoeff() > 0.0)) throw NotPositiveDefinite("spectral diagnostic: S~ not positive definite");
    T = sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  }
  Vector dropped(nb);
  for (Eigen::Index a = 0; a < nb; ++a) dropped[a] = E[a] == 0.0 ? 1.0 / Ht[a] : 0.0;
  const Dense G = T * AB * dropped.cwiseSqrt().asDiagonal();
  Vector schur_eigs = Vector::Ones(m);
  if (m > 0 && nb > 0) {
    const Vector sv = Eigen::BDCSVD<Dense>(G).singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) schur_eigs[i] += sv[i] * sv[i];
  }
  rep.schur_eig_min = m > 0 ? schur_eigs.minCoeff() : 1.0;
  rep.schur_eig_max = m > 0 ? schur_eigs.maxCoeff() : 1.0;
  rep.schur_bound_holds =
      rep.schur_bound.contains(rep.schur_eig_min, schur_slack) && rep.schur_bound.contains(rep.schur_eig_max, schur_slack);
  rep.alpha_NE = rep.schur_eig_min;
  rep.beta_NE = rep.schur_eig_max;

  const Vector h_isqrt = Ht.cwiseSqrt().cwiseInverse();
  const Dense Hbar = h_isqrt.asDiagonal() * H * h_isqrt.asDiagonal();
  if (nb > 0) {
    const Vector he = Eigen::SelfAdjointEigenSolver<Dense>(Hbar, Eigen::EigenvaluesOnly).eigenvalues();
    rep.alpha_H = he.minCoeff();
    rep.beta_H = he.maxCoeff();
  } else {
    rep.alpha_H = rep.beta_H = 1.0;
  }
  rep.negative_interval = {-rep.beta_H - std::sqrt(rep.beta_NE), -rep.alpha_H};
  rep.positive_interval = {1.0 / (1.0 + rep.beta_H), 1.0 + std::sqrt(std::max(rep.beta_NE - 1.0, 0.0))};

  // Symmetric congruence blkdiag(H~^-1/2, T) M^ blkdiag(H~^-1/2, T') is similar to M~^-1 M^.
  Dense K(nb + m, nb + m);
  K.topLeftCorner(nb, nb) = -Hbar;
  const Dense off = T * AB * h_isqrt.asDiagonal();
  K.bottomLeftCorner(m, nb) = off;
  K.topRightCorner(nb, m) = off.transpose();
  K.bottomRightCorner(m, m) = T * T.transpose() / pen.beta;
  rep.saddle_eigenvalues = nb + m > 0
                               ? Vector(Eigen::SelfAdjointEigenSolver<Dense>(K, Eigen::EigenvaluesOnly).eigenvalues())
                               : Vector();
  for (Eigen::Index i = 0; i < rep.saddle_eigenvalues.size(); ++i) {
    const double lam = rep.saddle_eigenvalues[i];
    if (!rep.negative_interval.contains(lam, interval_slack) && !rep.positive_interval.contains(lam, interval_slack))
      ++rep.eigenvalues_outside;
  }
  rep.intervals_hold = rep.eigenvalues_outside == 0;
  return rep;
}

}  // namespace ssnpmm::precond
