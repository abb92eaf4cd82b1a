#include "ssnpmm/generators.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ssnpmm/errors.hpp"

namespace ssnpmm::gen {

const char* to_string(Family f) { return f == Family::Poisson ? "poisson" : "convdiff"; }

Family family_from_string(const std::string& s) {
  if (s == "poisson") return Family::Poisson;
  if (s == "convdiff") return Family::ConvectionDiffusion;
  throw ValidationError("unknown instance family '" + s + "' (expected poisson or convdiff)");
}

void validate(const ControlInstanceSpec& spec) {
  if (spec.N < 2) throw ValidationError("grid size N must be at least 2");
  if (!(spec.alpha1 >= 0.0) || !(spec.alpha2 >= 0.0)) throw ValidationError("alpha1 and alpha2 must be >= 0");
  if (spec.family == Family::ConvectionDiffusion && !(spec.epsilon > 0.0))
    throw ValidationError("diffusion coefficient must be > 0");
  if (!(spec.ua <= spec.ub)) throw ValidationError("control bounds must satisfy ua <= ub");
}

double poisson_target(double x1, double x2) {
  return std::sin(std::numbers::pi * x1) * std::sin(std::numbers::pi * x2);
}

double convdiff_target(double x1, double x2) {
  return std::exp(-64.0 * ((x1 - 0.5) * (x1 - 0.5) + (x2 - 0.5) * (x2 - 0.5)));
}

std::array<double, 2> wind(double x1, double x2) {
  return {2.0 * x2 * (1.0 - x1) * (1.0 - x1), -2.0 * x1 * (1.0 - x2 * x2)};
}

SparseMatrix state_operator(const ControlInstanceSpec& spec) {
  validate(spec);
  const int N = spec.N;
  const double h = 1.0 / (N + 1);
  const bool convective = spec.family == Family::ConvectionDiffusion;
  const double diff = (convective ? spec.epsilon : 1.0) / (h * h);
  auto index = [N](int i, int j) { return (j - 1) * N + (i - 1); };

  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(5 * N * N));
  for (int j = 1; j <= N; ++j) {
    for (int i = 1; i <= N; ++i) {
      const int row = index(i, j);
      double centre = 4.0 * diff;
      // Coefficients of the west, east, south, north neighbours.
      double west = -diff, east = -diff, south = -diff, north = -diff;
      if (convective) {
        const auto w = wind(i * h, j * h);
        if (w[0] > 0) {
          centre += w[0] / h;
          west -= w[0] / h;
        } else {
          centre -= w[0] / h;
          east += w[0] / h;
        }
        if (w[1] > 0) {
          centre += w[1] / h;
          south -= w[1] / h;
        } else {
          centre -= w[1] / h;
          north += w[1] / h;
        }
      }
      t.emplace_back(row, row, centre);
      if (i > 1 && west != 0.0) t.emplace_back(row, index(i - 1, j), west);
      if (i < N && east != 0.0) t.emplace_back(row, index(i + 1, j), east);
      if (j > 1 && south != 0.0) t.emplace_back(row, index(i, j - 1), south);
      if (j < N && north != 0.0) t.emplace_back(row, index(i, j + 1), north);
    }
  }
  SparseMatrix L(N * N, N * N);
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

namespace {

Problem assemble(const ControlInstanceSpec& spec, double (*target)(double, double), const char* family) {
  const int N = spec.N;
  const int nn = N * N;
  const double h = 1.0 / (N + 1);
  const double h2 = h * h;
  const SparseMatrix L = state_operator(spec);

  Problem p;
  p.name = std::string(family) + "_N" + std::to_string(N) + "_a1_" + io::format_double(spec.alpha1) + "_a2_" +
           io::format_double(spec.alpha2);
  if (spec.family == Family::ConvectionDiffusion) p.name += "_eps_" + io::format_double(spec.epsilon);

  std::vector<Triplet> q;
  q.reserve(static_cast<std::size_t>(2 * nn));
  for (int k = 0; k < nn; ++k) {
    q.emplace_back(k, k, h2);
    if (spec.alpha2 != 0.0) q.emplace_back(nn + k, nn + k, spec.alpha2 * h2);
  }
  p.Q.resize(2 * nn, 2 * nn);
  p.Q.setFromTriplets(q.begin(), q.end());

  std::vector<Triplet> a;
  a.reserve(static_cast<std::size_t>(L.nonZeros() + nn));
  for (int k = 0; k < L.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(L, k); it; ++it)
      a.emplace_back(static_cast<int>(it.row()), k, -h2 * it.value());
  for (int k = 0; k < nn; ++k) a.emplace_back(k, nn + k, h2);
  p.A.resize(nn, 2 * nn);
  p.A.setFromTriplets(a.begin(), a.end());

  p.c = Vector::Zero(2 * nn);
  for (int j = 1; j <= N; ++j)
    for (int i = 1; i <= N; ++i) p.c[(j - 1) * N + (i - 1)] = -h2 * target(i * h, j * h);
  p.b = Vector::Zero(nn);
  p.d = Vector::Zero(2 * nn);
  p.d.tail(nn).setConstant(spec.alpha1 * h2);

  constexpr double inf = std::numeric_limits<double>::infinity();
  p.l = Vector::Constant(2 * nn, -inf);
  p.u = Vector::Constant(2 * nn, inf);
  p.l.tail(nn).setConstant(spec.ua);
  p.u.tail(nn).setConstant(spec.ub);
  return p;
}

}  // namespace

Problem gen_poisson_control(const ControlInstanceSpec& spec) {
  ControlInstanceSpec s = spec;
  s.family = Family::Poisson;
  return assemble(s, &poisson_target, "poisson");
}

Problem gen_convdiff_control(const ControlInstanceSpec& spec) {
  ControlInstanceSpec s = spec;
  s.family = Family::ConvectionDiffusion;
  return assemble(s, &convdiff_target, "convdiff");
}

Problem generate(const ControlInstanceSpec& spec) {
  return spec.family == Family::Poisson ? gen_poisson_control(spec) : gen_convdiff_control(spec);
}

}  // namespace ssnpmm::gen
