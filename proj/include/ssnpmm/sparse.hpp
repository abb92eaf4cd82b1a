#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ssnpmm/types.hpp"

namespace ssnpmm::sparse {

/// Sparse product M v. Throws DimensionMismatch when the sizes disagree.
Vector spmv(const SparseMatrix& M, const Vector& v);

/// True when M is square and M == M' entry for entry.
bool is_symmetric(const SparseMatrix& M);

/// A sparse factorization with a fill-reducing (approximate minimum degree)
/// symmetric permutation. Immutable once built; `solve` is const and may be
/// called concurrently.
class Factorization {
 public:
  enum class Kind { Cholesky, LDLT };

  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;
  ~Factorization();

  Kind kind() const { return kind_; }
  Eigen::Index dimension() const { return dimension_; }
  /// Fill-reducing permutation (P such that P M P' is factored).
  Eigen::VectorXi permutation() const;
  /// Nonzeros stored in the factor L.
  Eigen::Index factor_nonzeros() const;
  /// Diagonal of D for LDLT (or squared diagonal of L for Cholesky).
  Vector pivots() const;

  Vector solve(const Vector& rhs) const;

 private:
  struct Impl;
  Factorization(Kind kind, std::unique_ptr<Impl> impl, Eigen::Index dim);
  friend Factorization factorize_spd(const SparseMatrix& M);
  friend Factorization factorize_quasidef(const SparseMatrix& M);

  Kind kind_;
  std::unique_ptr<Impl> impl_;
  Eigen::Index dimension_;
};

/// Cholesky of a symmetric positive definite matrix. Throws NotPositiveDefinite.
Factorization factorize_spd(const SparseMatrix& M);

/// LDL' of a symmetric quasi-definite matrix. Throws FactorizationBreakdown on a
/// zero or non-finite pivot.
Factorization factorize_quasidef(const SparseMatrix& M);

using LinearOperator = std::function<Vector(const Vector&)>;

struct MinresStats {
  int iterations = 0;
  /// Preconditioned residual norm relative to ||rhs||_{P^-1}.
  double final_relative_residual = 0.0;
  bool converged = false;
  /// Preconditioned residual norm after each iteration, starting with the initial one.
  std::vector<double> residual_history;
};

struct MinresResult {
  Vector solution;
  MinresStats stats;
};

/// Preconditioned MINRES for a symmetric (possibly indefinite) operator with a
/// symmetric positive definite preconditioner applied through its inverse.
/// Stops once ||r||_{P^-1} <= tol * ||rhs||_{P^-1}. When `initial_guess` is
/// non-empty the iteration starts from it. Throws PreconditionerBreakdown.
MinresResult minres(const LinearOperator& apply_M, const LinearOperator& apply_Pinv, const Vector& rhs,
                    double tol, int maxit, const Vector& initial_guess = Vector());

}  // namespace ssnpmm::sparse
