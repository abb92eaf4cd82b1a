#include "ssnpmm/prox.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace ssnpmm::prox {

double clamp(double w, double lo, double hi) { return std::min(std::max(w, lo), hi); }

Vector soft_threshold(const Vector& w, double zeta, const Vector& d) {
  assert(w.size() == d.size());
  Vector out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double shrunk = std::abs(w[i]) - zeta * d[i];
    if (shrunk <= 0.0) {
      out[i] = 0.0;
    } else {
      out[i] = w[i] > 0.0 ? shrunk : -shrunk;
    }
  }
  return out;
}

Vector project_box(const Vector& w, const BoxSet& box) {
  assert(w.size() == box.size());
  Vector out(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) out[i] = clamp(w[i], box.lower[i], box.upper[i]);
  return out;
}

Vector prox_conjugate_box(const Vector& v, double beta, const BoxSet& box) {
  assert(v.size() == box.size());
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double scaled = v[i] / beta;
    if (scaled >= box.upper[i]) {
      out[i] = v[i] - beta * box.upper[i];
    } else if (scaled <= box.lower[i]) {
      out[i] = v[i] - beta * box.lower[i];
    } else {
      out[i] = 0.0;
    }
  }
  return out;
}

Vector project_subdiff_g(const Vector& v, const Vector& x, const Vector& d) {
  assert(v.size() == x.size() && x.size() == d.size());
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (x[i] == 0.0) {
      out[i] = clamp(v[i], -d[i], d[i]);
    } else {
      out[i] = x[i] > 0.0 ? d[i] : -d[i];
    }
  }
  return out;
}

}  // namespace ssnpmm::prox
