#pragma once

#include "ssnpmm/types.hpp"

namespace ssnpmm::prox {

/// The box K = {x : lower <= x <= upper}; entries may be +-infinity.
struct BoxSet {
  Vector lower;
  Vector upper;

  Eigen::Index size() const { return lower.size(); }
  /// Strict membership l_i < w < u_i, used for the Jacobian selections.
  bool interior(Eigen::Index i, double w) const { return lower[i] < w && w < upper[i]; }
};

double clamp(double w, double lo, double hi);

/// prox of zeta * ||D x||_1: componentwise max(|w_i| - zeta d_i, 0) sign(w_i).
Vector soft_threshold(const Vector& w, double zeta, const Vector& d);

/// Euclidean projection onto K.
Vector project_box(const Vector& w, const BoxSet& box);

/// prox of beta * (indicator of K)^*, evaluated as v - beta * Pi_K(v / beta).
/// Interior components are returned as exact zeros.
Vector prox_conjugate_box(const Vector& v, double beta, const BoxSet& box);

/// Projection of v onto the subdifferential of x -> sum_i d_i |x_i| at x.
/// x_i counts as a kink only when it is bit-equal to zero.
Vector project_subdiff_g(const Vector& v, const Vector& x, const Vector& d);

}  // namespace ssnpmm::prox
