#pragma once

#include <memory>
#include <optional>

#include "ssnpmm/ssn.hpp"

namespace ssnpmm::precond {

/// Schur-complement dropping matrix E (length |bhat|): 1/diag(H)_i where the
/// bhat index is also box-interior, 0 otherwise.
Vector build_E(const ssn::ActiveSets& sets, const Vector& diag_H_bhat);

/// Block-diagonal preconditioner diag( Diag(H_(B,B)),  A_B E A_B' + I/beta ).
struct Preconditioner {
  struct Fingerprint {
    Mask b_mask;
    Mask bhat_mask;
    double beta = 0.0;

    bool operator==(const Fingerprint& o) const {
      return beta == o.beta && b_mask == o.b_mask && bhat_mask == o.bhat_mask;
    }
  };

  Vector diag_H_inv;
  std::shared_ptr<const sparse::Factorization> schur_factor;  ///< null when m == 0
  double beta = 0.0;
  Fingerprint fingerprint;

  /// Applies the inverse of the preconditioner to a reduced-system vector.
  Vector apply_inverse(const Vector& v) const;
};

/// Holds the last preconditioner of an SSN call chain; reused while masks and beta repeat.
class PreconditionerCache {
 public:
  int factorizations() const { return factorizations_; }
  const std::optional<Preconditioner>& current() const { return current_; }

 private:
  friend const Preconditioner& build_preconditioner(const Problem&, const ssn::ActiveSets&,
                                                    const pmm::PenaltyState&, PreconditionerCache&);
  std::optional<Preconditioner> current_;
  int factorizations_ = 0;
};

/// Returns the cached preconditioner when its fingerprint matches, otherwise
/// factors S~ = A_B E A_B' + I/beta afresh (counted by the cache).
const Preconditioner& build_preconditioner(const Problem& p, const ssn::ActiveSets& sets,
                                           const pmm::PenaltyState& pen, PreconditionerCache& cache);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v, double slack) const { return v >= lo - slack && v <= hi + slack; }
};

struct SpectralReport {
  Eigen::Index bhat_size = 0;
  Eigen::Index m = 0;
  double sigma_max_A = 0.0;

  // Schur complement approximation: eig(S~^-1 S^).
  Interval schur_bound;
  double schur_eig_min = 0.0;
  double schur_eig_max = 0.0;
  bool schur_bound_holds = false;

  // Preconditioned saddle-point matrix: eig(M~^-1 M^).
  double alpha_H = 0.0, beta_H = 0.0, alpha_NE = 0.0, beta_NE = 0.0;
  Interval negative_interval;
  Interval positive_interval;
  Vector saddle_eigenvalues;
  int eigenvalues_outside = 0;
  bool intervals_hold = false;
};

constexpr Eigen::Index kSpectralSizeLimit = 400;

/// Dense eigen-analysis of the preconditioned Schur complement and saddle-point
/// matrices for the given selections. Throws TooLarge above kSpectralSizeLimit.
SpectralReport spectral_diagnostic(const Problem& p, const ssn::ActiveSets& sets, const pmm::PenaltyState& pen,
                                   double schur_slack = 1e-10, double interval_slack = 1e-8);

}  // namespace ssnpmm::precond
