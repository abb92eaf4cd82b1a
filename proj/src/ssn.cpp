#include "ssnpmm/ssn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssnpmm/precond.hpp"

namespace ssnpmm::ssn {

NaturalMap natural_map(const Vector& x, const Vector& y, const pmm::PmmState& s, const Problem& p) {
  const double zeta = s.penalties.zeta;
  NaturalMap nm;
  nm.u_hat = x - zeta * pmm::residual_r(x, y, s, p);
  nm.prox_u = prox::soft_threshold(nm.u_hat, zeta, p.d);
  nm.F.resize(p.n() + p.m());
  nm.F.head(p.n()) = x - nm.prox_u;
  nm.F.tail(p.m()) = zeta * pmm::dual_block(x, y, s, p);
  return nm;
}

double merit(const Vector& x, const Vector& y, const pmm::PmmState& s, const Problem& p) {
  return natural_map(x, y, s, p).F.squaredNorm();
}

ActiveSets build_active_sets(const Vector& x, const Vector& z_anchor, const Vector& u_hat,
                             const pmm::PmmState& s, const Problem& p) {
  const Eigen::Index n = p.n();
  const double beta = s.penalties.beta;
  const double zeta = s.penalties.zeta;
  const prox::BoxSet box = p.box();
  ActiveSets sets;
  sets.b_mask.resize(n);
  sets.bhat_mask.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sets.b_mask[i] = box.interior(i, z_anchor[i] / beta + x[i]);
    const bool bhat = p.d[i] == 0.0 || std::abs(u_hat[i]) > zeta * p.d[i];
    sets.bhat_mask[i] = bhat;
    (bhat ? sets.bhat_indices : sets.nhat_indices).push_back(static_cast<int>(i));
  }
  return sets;
}

namespace {

Vector shift_vector(const ActiveSets& sets, const pmm::PenaltyState& pen) {
  Vector shift(sets.b_mask.size());
  for (Eigen::Index i = 0; i < shift.size(); ++i)
    shift[i] = sets.b_mask[i] ? 1.0 / pen.rho : pen.beta + 1.0 / pen.rho;
  return shift;
}

}  // namespace

Vector hessian_diagonal(const Problem& p, const ActiveSets& sets, const pmm::PenaltyState& pen) {
  return Vector(p.Q.diagonal()) + shift_vector(sets, pen);
}

NewtonSystem::NewtonSystem(const Problem& p, const pmm::PmmState& s, ActiveSets sets, const Vector& x,
                           const Vector& y, const NaturalMap& nm)
    : p_(&p), beta_(s.penalties.beta), sets_(std::move(sets)), diag_shift_(shift_vector(sets_, s.penalties)) {
  const Eigen::Index n = p.n();
  const Eigen::Index nb = static_cast<Eigen::Index>(sets_.bhat_indices.size());
  const double zeta = s.penalties.zeta;
  const Vector gap = x - nm.prox_u;

  dx_n_ = Vector::Zero(n);
  for (int i : sets_.nhat_indices) dx_n_[i] = -gap[i];

  const Vector q_dn = p.Q * dx_n_;
  rhs_.resize(nb + p.m());
  for (Eigen::Index k = 0; k < nb; ++k) {
    const int i = sets_.bhat_indices[static_cast<std::size_t>(k)];
    rhs_[k] = gap[i] / zeta + q_dn[i];
  }
  rhs_.tail(p.m()) = p.b - p.A * x - (y - s.y) / beta_ - p.A * dx_n_;
}

Vector NewtonSystem::scatter_bhat(const Vector& v_b) const {
  Vector full = Vector::Zero(p_->n());
  for (std::size_t k = 0; k < sets_.bhat_indices.size(); ++k)
    full[sets_.bhat_indices[k]] = v_b[static_cast<Eigen::Index>(k)];
  return full;
}

Vector NewtonSystem::apply(const Vector& v) const {
  const Eigen::Index nb = static_cast<Eigen::Index>(sets_.bhat_indices.size());
  const Eigen::Index m = p_->m();
  const Vector vx = scatter_bhat(v.head(nb));
  const Vector vy = v.tail(m);
  const Vector top = -(p_->Q * vx) - diag_shift_.cwiseProduct(vx) + p_->A.transpose() * vy;
  Vector out(nb + m);
  for (Eigen::Index k = 0; k < nb; ++k) out[k] = top[sets_.bhat_indices[static_cast<std::size_t>(k)]];
  out.tail(m) = p_->A * vx + vy / beta_;
  return out;
}

Eigen::MatrixXd NewtonSystem::dense() const {
  const Eigen::Index dim = dimension();
  Eigen::MatrixXd M(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) M.col(j) = apply(Vector::Unit(dim, j));
  return M;
}

NewtonSystem::Step NewtonSystem::expand(const Vector& reduced) const {
  const Eigen::Index nb = static_cast<Eigen::Index>(sets_.bhat_indices.size());
  Step st;
  st.dx = scatter_bhat(reduced.head(nb)) + dx_n_;
  st.dy = reduced.tail(p_->m());
  return st;
}

Vector apply_jacobian(const Problem& p, const pmm::PmmState& s, const ActiveSets& sets, const Vector& dx,
                      const Vector& dy) {
  const double zeta = s.penalties.zeta;
  const Vector h_dx = p.Q * dx + shift_vector(sets, s.penalties).cwiseProduct(dx);
  const Vector inner = h_dx - p.A.transpose() * dy;
  Vector out(p.n() + p.m());
  for (Eigen::Index i = 0; i < p.n(); ++i) out[i] = sets.bhat_mask[i] ? zeta * inner[i] : dx[i];
  out.tail(p.m()) = zeta * (p.A * dx + dy / s.penalties.beta);
  return out;
}

namespace {

/// One component of F_hat on a ray segment: F_i(alpha) = f0 + f1 alpha and
/// u_hat_i(alpha) = p0 + p1 alpha.
struct RayPiece {
  double f0, f1, p0, p1;
};

class Ray {
 public:
  Ray(const Vector& x, const Vector& y, const Vector& dx, const Vector& dy, const pmm::PmmState& s, const Problem& p)
      : x_(x), dx_(dx), s_(s), p_(p), box_(p.box()) {
    const double rho = s.penalties.rho;
    L0_ = p.c + p.Q * x - p.A.transpose() * y + (x - s.x) / rho;
    L1_ = p.Q * dx - p.A.transpose() * dy + dx / rho;
  }

  RayPiece piece(Eigen::Index i, double a) const {
    const double beta = s_.penalties.beta, zeta = s_.penalties.zeta;
    const double w = s_.z[i] / beta + x_[i] + a * dx_[i];
    double b0 = 0.0, b1 = 0.0;
    if (w >= box_.upper[i]) {
      b0 = s_.z[i] + beta * (x_[i] - box_.upper[i]);
      b1 = beta * dx_[i];
    } else if (w <= box_.lower[i]) {
      b0 = s_.z[i] + beta * (x_[i] - box_.lower[i]);
      b1 = beta * dx_[i];
    }
    const double g0 = zeta * (L0_[i] + b0), g1 = zeta * (L1_[i] + b1);
    RayPiece out{g0, g1, x_[i] - g0, dx_[i] - g1};
    const double t = zeta * p_.d[i];
    if (t > 0.0) {
      const double uh = out.p0 + out.p1 * a;
      if (uh > t) out.f0 += t;
      else if (uh < -t) out.f0 -= t;
      else out.f0 = x_[i], out.f1 = dx_[i];
    }
    return out;
  }

  /// Kinks of component i inside (0, 1), sorted.
  void kinks(Eigen::Index i, std::vector<double>& out) const {
    out.clear();
    if (dx_[i] != 0.0) {
      const double w0 = s_.z[i] / s_.penalties.beta + x_[i];
      for (double bound : {box_.lower[i], box_.upper[i]}) {
        if (!std::isfinite(bound)) continue;
        const double a = (bound - w0) / dx_[i];
        if (a > 0.0 && a < 1.0) out.push_back(a);
      }
      std::sort(out.begin(), out.end());
    }
    const double t = s_.penalties.zeta * p_.d[i];
    if (t <= 0.0) return;
    const std::size_t nbox = out.size();
    double lo = 0.0;
    for (std::size_t k = 0; k <= nbox; ++k) {
      const double hi = k < nbox ? out[k] : 1.0;
      const RayPiece pc = piece(i, 0.5 * (lo + hi));
      if (pc.p1 != 0.0)
        for (double level : {t, -t}) {
          const double a = (level - pc.p0) / pc.p1;
          if (a > lo && a < hi) out.push_back(a);
        }
      lo = hi;
    }
    std::sort(out.begin(), out.end());
  }

 private:
  const Vector& x_;
  const Vector& dx_;
  const pmm::PmmState& s_;
  const Problem& p_;
  prox::BoxSet box_;
  Vector L0_, L1_;
};

}  // namespace

double ray_minimizer(const Vector& x, const Vector& y, const Vector& dx, const Vector& dy, const pmm::PmmState& s,
                     const Problem& p) {
  const Ray ray(x, y, dx, dy, s, p);
  const double zeta = s.penalties.zeta;
  const Vector g0 = zeta * pmm::dual_block(x, y, s, p);
  const Vector g1 = zeta * (p.A * dx + dy / s.penalties.beta);
  double qa = g1.squaredNorm(), qb = 2.0 * g0.dot(g1), qc = g0.squaredNorm();

  const Eigen::Index n = p.n();
  std::vector<std::vector<double>> kinks(static_cast<std::size_t>(n));
  std::vector<std::size_t> seg(static_cast<std::size_t>(n), 0);
  std::vector<RayPiece> cur(static_cast<std::size_t>(n));
  std::vector<std::pair<double, Eigen::Index>> events;
  auto add = [&](const RayPiece& pc, double sign) {
    qa += sign * pc.f1 * pc.f1;
    qb += sign * 2.0 * pc.f0 * pc.f1;
    qc += sign * pc.f0 * pc.f0;
  };
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& kk = kinks[static_cast<std::size_t>(i)];
    ray.kinks(i, kk);
    cur[static_cast<std::size_t>(i)] = ray.piece(i, 0.5 * (kk.empty() ? 1.0 : kk.front()));
    add(cur[static_cast<std::size_t>(i)], 1.0);
    for (double a : kk) events.emplace_back(a, i);
  }
  std::sort(events.begin(), events.end());

  double best_a = 0.0, best_v = qc;
  auto consider = [&](double lo, double hi) {
    auto value = [&](double a) { return (qa * a + qb) * a + qc; };
    if (value(hi) < best_v) best_v = value(hi), best_a = hi;
    if (qa > 0.0) {
      const double v = -qb / (2.0 * qa);
      if (v > lo && v < hi && value(v) < best_v) best_v = value(v), best_a = v;
    }
  };
  double lo = 0.0;
  for (std::size_t e = 0; e < events.size();) {
    const double hi = events[e].first;
    consider(lo, hi);
    for (; e < events.size() && events[e].first == hi; ++e) {
      const auto i = static_cast<std::size_t>(events[e].second);
      const auto& kk = kinks[i];
      add(cur[i], -1.0);
      const std::size_t next = ++seg[i];
      const double end = next < kk.size() ? kk[next] : 1.0;
      cur[i] = ray.piece(events[e].second, 0.5 * (hi + end));
      add(cur[i], 1.0);
    }
    lo = hi;
  }
  consider(lo, 1.0);
  return best_a;
}

SsnResult ssn_solve(const pmm::PmmState& s, const Problem& p, double eps, const SsnConfig& cfg,
                    precond::PreconditionerCache& cache) {
  SsnResult res;
  Vector x = s.x;
  Vector y = s.y;
  Vector best_x, best_y;
  double best_dist = std::numeric_limits<double>::infinity();

  for (int it = 0;; ++it) {
    res.dist = pmm::dist_F(x, y, s, p);
    if (res.dist <= eps) {
      res.converged = true;
      break;
    }
    if (res.dist < best_dist) {
      best_dist = res.dist;
      best_x = x;
      best_y = y;
    }
    if (it == cfg.max_iters) {
      x = std::move(best_x);
      y = std::move(best_y);
      res.dist = best_dist;
      break;
    }

    const NaturalMap nm = natural_map(x, y, s, p);
    const double norm_F = nm.F.norm();
    const double theta = norm_F * norm_F;
    NewtonSystem sys(p, s, build_active_sets(x, s.z, nm.u_hat, s, p), x, y, nm);
    const precond::Preconditioner& P = precond::build_preconditioner(p, sys.sets(), s.penalties, cache);

    StepRecord rec;
    rec.merit_before = theta;
    rec.linear_tolerance = std::min(cfg.eta1, std::pow(norm_F, 1.0 + cfg.eta2));
    double rel_tol = rec.linear_tolerance / (2.0 * norm_F);

    auto apply_M = [&](const Vector& v) { return sys.apply(v); };
    auto apply_P = [&](const Vector& v) { return P.apply_inverse(v); };
    auto full_residual = [&](const NewtonSystem::Step& st) {
      return (apply_jacobian(p, s, sys.sets(), st.dx, st.dy) + nm.F).norm();
    };

    Vector sol;
    NewtonSystem::Step step;
    for (int attempt = 0; attempt < 3; ++attempt) {
      sparse::MinresResult mr = sparse::minres(apply_M, apply_P, sys.rhs(), rel_tol, cfg.minres_maxit, sol);
      ++res.minres_calls;
      res.minres_iterations += mr.stats.iterations;
      rec.minres_iterations += mr.stats.iterations;
      if (!mr.stats.converged) ++res.minres_not_converged;
      sol = std::move(mr.solution);
      step = sys.expand(sol);
      rec.linear_residual = full_residual(step);
      if (rec.linear_residual <= rec.linear_tolerance) break;
      rel_tol *= 0.5;
    }

    const bool search = !(it == 0 && cfg.first_step_full);
    rec.line_search = search;
    double alpha = 1.0;
    Vector x_new = x + step.dx;
    Vector y_new = y + step.dy;
    double theta_new = merit(x_new, y_new, s, p);
    if (search && cfg.line_search == LineSearch::Piecewise && theta_new > (1.0 - 2.0 * cfg.mu) * theta) {
      const double a = ray_minimizer(x, y, step.dx, step.dy, s, p);
      const Vector xa = x + a * step.dx, ya = y + a * step.dy;
      const double ta = merit(xa, ya, s, p);
      if (a > 0.0 && ta <= (1.0 - 2.0 * cfg.mu * a) * theta) {
        alpha = a;
        x_new = xa;
        y_new = ya;
        theta_new = ta;
      }
    }
    if (search) {
      double best_alpha = alpha, best_theta = theta_new;
      int trials = 1;
      while (theta_new > (1.0 - 2.0 * cfg.mu * alpha) * theta) {
        if (trials > cfg.max_linesearch) {
          rec.line_search_failed = true;
          break;
        }
        alpha *= cfg.delta;
        x_new = x + alpha * step.dx;
        y_new = y + alpha * step.dy;
        theta_new = merit(x_new, y_new, s, p);
        ++trials;
        if (theta_new < best_theta) {
          best_theta = theta_new;
          best_alpha = alpha;
        }
      }
      if (rec.line_search_failed) {
        ++res.linesearch_failures;
        alpha = best_alpha;
        x_new = x + alpha * step.dx;
        y_new = y + alpha * step.dy;
        theta_new = best_theta;
      }
    }
    rec.alpha = alpha;
    rec.merit_after = theta_new;
    res.steps.push_back(rec);
    x = std::move(x_new);
    y = std::move(y_new);
    ++res.iterations;
  }
  res.x = std::move(x);
  res.y = std::move(y);
  return res;
}

}  // namespace ssnpmm::ssn
