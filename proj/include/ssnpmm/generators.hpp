#pragma once

#include <array>
#include <string>

#include "ssnpmm/problem.hpp"

namespace ssnpmm::gen {

enum class Family { Poisson, ConvectionDiffusion };

const char* to_string(Family f);
/// Accepts "poisson" and "convdiff". Throws ValidationError otherwise.
Family family_from_string(const std::string& s);

struct ControlInstanceSpec {
  Family family = Family::Poisson;
  int N = 32;
  double alpha1 = 1e-2;
  double alpha2 = 1e-2;
  double epsilon = 0.02;
  double ua = -2.0;
  double ub = 1.5;
};

/// Throws ValidationError when N < 2, alpha1/alpha2 < 0, epsilon <= 0 or ua > ub.
void validate(const ControlInstanceSpec& spec);

double poisson_target(double x1, double x2);
double convdiff_target(double x1, double x2);
std::array<double, 2> wind(double x1, double x2);

/// Discrete state operator L_h on the N x N interior grid (homogeneous Dirichlet):
/// -Laplacian for Poisson, -eps Laplacian + w.grad (first-order upwind) otherwise.
/// Unknown (i, j), 1 <= i, j <= N, sits at (j - 1) N + (i - 1).
SparseMatrix state_operator(const ControlInstanceSpec& spec);

/// x = (y, u): Q = blkdiag(h^2 I, alpha2 h^2 I), c = (-h^2 ybar, 0), A = [-h^2 L_h, h^2 I],
/// b = 0, d = (0, alpha1 h^2), y free, ua <= u <= ub.
Problem gen_poisson_control(const ControlInstanceSpec& spec);
Problem gen_convdiff_control(const ControlInstanceSpec& spec);
Problem generate(const ControlInstanceSpec& spec);

}  // namespace ssnpmm::gen
