#include "ssnpmm/sparse.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <limits>
#include <variant>

#include "ssnpmm/errors.hpp"

namespace ssnpmm::sparse {

Vector spmv(const SparseMatrix& M, const Vector& v) {
  if (M.cols() != v.size())
    throw DimensionMismatch("spmv: matrix has " + std::to_string(M.cols()) + " columns, vector has " +
                            std::to_string(v.size()) + " entries");
  return M * v;
}

bool is_symmetric(const SparseMatrix& M) {
  if (M.rows() != M.cols()) return false;
  const SparseMatrix diff = SparseMatrix(M.transpose()) - M;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
      if (it.value() != 0.0) return false;
  return true;
}

using Llt = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

struct Factorization::Impl {
  std::variant<Llt, Ldlt> solver;
};

Factorization::Factorization(Kind kind, std::unique_ptr<Impl> impl, Eigen::Index dim)
    : kind_(kind), impl_(std::move(impl)), dimension_(dim) {}
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;
Factorization::~Factorization() = default;

Eigen::VectorXi Factorization::permutation() const {
  return std::visit([](const auto& s) -> Eigen::VectorXi { return s.permutationP().indices(); },
                    impl_->solver);
}

Eigen::Index Factorization::factor_nonzeros() const {
  return std::visit([](const auto& s) { return SparseMatrix(s.matrixL()).nonZeros(); }, impl_->solver);
}

Vector Factorization::pivots() const {
  if (const auto* ldlt = std::get_if<Ldlt>(&impl_->solver)) return ldlt->vectorD();
  const SparseMatrix L = std::get<Llt>(impl_->solver).matrixL();
  return L.diagonal().array().square();
}

Vector Factorization::solve(const Vector& rhs) const {
  if (rhs.size() != dimension_) throw DimensionMismatch("factorization solve: rhs size mismatch");
  return std::visit([&](const auto& s) -> Vector { return s.solve(rhs); }, impl_->solver);
}

Factorization factorize_spd(const SparseMatrix& M) {
  if (M.rows() != M.cols()) throw DimensionMismatch("factorize_spd: matrix must be square");
  auto impl = std::make_unique<Factorization::Impl>();
  impl->solver.emplace<Llt>();
  auto& llt = std::get<Llt>(impl->solver);
  llt.compute(M);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("Cholesky: nonpositive pivot encountered");
  const SparseMatrix L = llt.matrixL();
  if (!L.diagonal().allFinite()) throw NotPositiveDefinite("Cholesky: non-finite pivot");
  return Factorization(Factorization::Kind::Cholesky, std::move(impl), M.rows());
}

Factorization factorize_quasidef(const SparseMatrix& M) {
  if (M.rows() != M.cols()) throw DimensionMismatch("factorize_quasidef: matrix must be square");
  auto impl = std::make_unique<Factorization::Impl>();
  impl->solver.emplace<Ldlt>();
  auto& ldlt = std::get<Ldlt>(impl->solver);
  ldlt.compute(M);
  if (ldlt.info() != Eigen::Success) throw FactorizationBreakdown("LDL': zero pivot encountered");
  const Vector D = ldlt.vectorD();
  for (Eigen::Index i = 0; i < D.size(); ++i)
    if (!std::isfinite(D[i]) || D[i] == 0.0) throw FactorizationBreakdown("LDL': zero or non-finite pivot");
  return Factorization(Factorization::Kind::LDLT, std::move(impl), M.rows());
}

MinresResult minres(const LinearOperator& apply_M, const LinearOperator& apply_Pinv, const Vector& rhs,
                    double tol, int maxit, const Vector& initial_guess) {
  const Eigen::Index n = rhs.size();
  MinresResult out;
  out.solution = initial_guess.size() == n ? initial_guess : Vector::Zero(n);
  MinresStats& stats = out.stats;

  auto pnorm_sq = [&](const Vector& r, const Vector& z) {
    const double v = r.dot(z);
    if (v < 0.0 || !std::isfinite(v))
      throw PreconditionerBreakdown("MINRES: preconditioner is not positive definite");
    return v;
  };

  const double rhs_pnorm = std::sqrt(pnorm_sq(rhs, apply_Pinv(rhs)));
  if (rhs_pnorm == 0.0) {
    out.solution.setZero();
    stats.converged = true;
    stats.residual_history.push_back(0.0);
    return out;
  }

  Vector r1 = initial_guess.size() == n ? Vector(rhs - apply_M(out.solution)) : rhs;
  Vector y = apply_Pinv(r1);
  const double beta1 = std::sqrt(pnorm_sq(r1, y));
  const double target = tol * rhs_pnorm;

  stats.residual_history.push_back(beta1);
  stats.final_relative_residual = beta1 / rhs_pnorm;
  if (beta1 <= target) {
    stats.converged = true;
    return out;
  }

  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  Vector w = Vector::Zero(n), w1(n), w2 = Vector::Zero(n);
  Vector r2 = r1;
  constexpr double tiny = std::numeric_limits<double>::epsilon();

  for (int itn = 1; itn <= maxit; ++itn) {
    const Vector v = y / beta;
    y = apply_M(v);
    if (itn >= 2) y -= (beta / oldb) * r1;
    const double alfa = v.dot(y);
    y -= (alfa / beta) * r2;
    r1 = r2;
    r2 = y;
    y = apply_Pinv(r2);
    oldb = beta;
    beta = std::sqrt(pnorm_sq(r2, y));

    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), tiny);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    w = (v - oldeps * w1 - delta * w2) / gamma;
    out.solution += phi * w;

    stats.iterations = itn;
    stats.residual_history.push_back(phibar);
    stats.final_relative_residual = phibar / rhs_pnorm;
    if (phibar <= target || beta == 0.0) {
      stats.converged = phibar <= target;
      break;
    }
  }
  return out;
}

}  // namespace ssnpmm::sparse
