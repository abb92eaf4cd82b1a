#pragma once

#include <filesystem>
#include <string>

#include "ssnpmm/prox.hpp"
#include "ssnpmm/types.hpp"

namespace ssnpmm {

/// min c'x + 1/2 x'Qx + ||Dx||_1  s.t.  Ax = b,  l <= x <= u,  with D = diag(d).
///
/// Q is stored with both triangles. The box may have infinite entries.
struct Problem {
  std::string name;
  SparseMatrix Q;
  SparseMatrix A;
  Vector c;
  Vector b;
  Vector d;
  Vector l;
  Vector u;

  Eigen::Index n() const { return c.size(); }
  Eigen::Index m() const { return b.size(); }
  prox::BoxSet box() const { return {l, u}; }

  /// Objective value c'x + 1/2 x'Qx + ||Dx||_1 (the box and equalities are not checked).
  double objective(const Vector& x) const;
};

/// Throws DimensionMismatch or ValidationError when an invariant is violated.
void validate(const Problem& p);

enum class SolveStatus { Optimal, MaxIterations, LinearSolverFailure };

const char* to_string(SolveStatus s);
SolveStatus status_from_string(const std::string& s);

/// Scaled optimality residuals used for termination.
struct Residuals {
  double dual = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;

  double max() const;
  bool within(double tol) const { return max() <= tol; }
};

struct SolveReport {
  int pmm_iters = 0;
  int ssn_iters = 0;
  int minres_calls = 0;
  long minres_iters_total = 0;
  double minres_avg = 0.0;
  int minres_not_converged = 0;
  int factorizations = 0;
  int linesearch_failures = 0;
  int ssn_cap_hits = 0;
  bool warmstart_used = false;
  int warmstart_iters = 0;
  bool warmstart_converged = false;
  double wall_time_seconds = 0.0;
  Residuals final_residuals;
};

struct Solution {
  Vector x;
  Vector y;
  Vector z;
  SolveStatus status = SolveStatus::MaxIterations;
  SolveReport report;
};

/// Reads a problem bundle. `path` is either the manifest file or a directory
/// holding `manifest.txt`.
Problem load_problem(const std::filesystem::path& path);

/// Writes `dir/manifest.txt`, `dir/Q.mtx`, `dir/A.mtx` and the vector files.
void save_problem(const Problem& p, const std::filesystem::path& dir);

void save_solution(const Solution& s, const std::filesystem::path& path);
Solution load_solution(const std::filesystem::path& path);

/// The three scaled residuals
///   ||x - prox_g(x - c - Qx + A'y - z)|| / (1 + ||c||),
///   ||Ax - b|| / (1 + ||b||),
///   ||x - Pi_K(x + z)|| / (1 + ||x|| + ||z||).
Residuals kkt_residuals(const Problem& p, const Vector& x, const Vector& y, const Vector& z);

namespace io {

/// Shortest round-trip decimal form; infinities are written as inf / -inf.
std::string format_double(double v);
double parse_double(std::string_view token);

SparseMatrix read_matrix_market(const std::filesystem::path& path);
void write_matrix_market(const SparseMatrix& M, const std::filesystem::path& path, bool symmetric);

}  // namespace io

}  // namespace ssnpmm
