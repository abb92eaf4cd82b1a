#include "ssnpmm/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <json.hpp>

#include "ssnpmm/errors.hpp"
#include "ssnpmm/generators.hpp"
#include "ssnpmm/pmm.hpp"
#include "ssnpmm/precond.hpp"
#include "ssnpmm/ssn.hpp"

namespace ssnpmm::cli {

using io::format_double;

void write_report(const Solution& s, std::ostream& out) {
  const SolveReport& r = s.report;
  out << "status = " << to_string(s.status) << '\n'
      << "PMM = " << r.pmm_iters << '\n'
      << "SSN = " << r.ssn_iters << '\n'
      << "MINRES = " << r.minres_iters_total << '\n'
      << "MINRES_calls = " << r.minres_calls << '\n'
      << "MINRES_avg = " << format_double(r.minres_avg) << '\n'
      << "MINRES_not_converged = " << r.minres_not_converged << '\n'
      << "Factorizations = " << r.factorizations << '\n'
      << "Time = " << format_double(r.wall_time_seconds) << '\n'
      << "linesearch_failures = " << r.linesearch_failures << '\n'
      << "ssn_cap_hits = " << r.ssn_cap_hits << '\n'
      << "warmstart = " << (r.warmstart_used ? "used" : "skipped") << '\n'
      << "warmstart_iters = " << r.warmstart_iters << '\n'
      << "warmstart_converged = " << (r.warmstart_converged ? "true" : "false") << '\n'
      << "dual_residual = " << format_double(r.final_residuals.dual) << '\n'
      << "primal_residual = " << format_double(r.final_residuals.primal) << '\n'
      << "complementarity_residual = " << format_double(r.final_residuals.complementarity) << '\n';
}

void write_report_json(const Solution& s, std::ostream& out) {
  const SolveReport& r = s.report;
  nlohmann::ordered_json j;
  j["status"] = to_string(s.status);
  j["PMM"] = r.pmm_iters;
  j["SSN"] = r.ssn_iters;
  j["MINRES"] = r.minres_iters_total;
  j["MINRES_calls"] = r.minres_calls;
  j["MINRES_avg"] = r.minres_avg;
  j["MINRES_not_converged"] = r.minres_not_converged;
  j["Factorizations"] = r.factorizations;
  j["Time"] = r.wall_time_seconds;
  j["linesearch_failures"] = r.linesearch_failures;
  j["ssn_cap_hits"] = r.ssn_cap_hits;
  j["warmstart"] = {{"used", r.warmstart_used}, {"iters", r.warmstart_iters}, {"converged", r.warmstart_converged}};
  j["residuals"] = {{"dual", r.final_residuals.dual},
                    {"primal", r.final_residuals.primal},
                    {"complementarity", r.final_residuals.complementarity}};
  out << j.dump(2) << '\n';
}

namespace {

struct GenerateArgs {
  std::string family;
  int grid = 0;
  double alpha1 = 1e-2;
  double alpha2 = 1e-2;
  double eps = 0.02;
  std::string out;
};

struct SolveArgs {
  std::string problem;
  std::string output;
  bool json = false;
  pmm::SolverConfig cfg;
};

struct CheckArgs {
  std::string problem;
  std::string solution;
  double tol = 1e-5;
  bool spectral = false;
  double beta = 1e2;
  double rho = 5e2;
};

int do_generate(const GenerateArgs& a, std::ostream& out) {
  gen::ControlInstanceSpec spec;
  spec.family = gen::family_from_string(a.family);
  spec.N = a.grid;
  spec.alpha1 = a.alpha1;
  spec.alpha2 = a.alpha2;
  spec.epsilon = a.eps;
  const Problem p = gen::generate(spec);
  save_problem(p, a.out);
  out << "name = " << p.name << '\n' << "n = " << p.n() << '\n' << "m = " << p.m() << '\n';
  return kOk;
}

int do_solve(const SolveArgs& a, std::ostream& out) {
  const Problem p = load_problem(a.problem);
  const Solution s = pmm::solve(p, a.cfg);
  std::filesystem::path dest = a.output;
  if (dest.empty()) {
    const std::filesystem::path src = a.problem;
    dest = (std::filesystem::is_directory(src) ? src : src.parent_path()) / "solution.txt";
  }
  save_solution(s, dest);
  if (a.json)
    write_report_json(s, out);
  else
    write_report(s, out);
  switch (s.status) {
    case SolveStatus::Optimal: return kOk;
    case SolveStatus::MaxIterations: return kNotReached;
    case SolveStatus::LinearSolverFailure: return kFailure;
  }
  return kFailure;
}

void spectral_report(const Problem& p, const Solution& s, const CheckArgs& a, std::ostream& out) {
  pmm::PmmState st;
  st.x = s.x;
  st.y = s.y;
  st.z = s.z;
  st.penalties = pmm::PenaltyState::initial(a.beta, a.rho);
  const ssn::NaturalMap nm = ssn::natural_map(s.x, s.y, st, p);
  const ssn::ActiveSets sets = ssn::build_active_sets(s.x, s.z, nm.u_hat, st, p);
  const precond::SpectralReport r = precond::spectral_diagnostic(p, sets, st.penalties);
  out << "spectral.bhat_size = " << r.bhat_size << '\n'
      << "spectral.schur_eig_min = " << format_double(r.schur_eig_min) << '\n'
      << "spectral.schur_eig_max = " << format_double(r.schur_eig_max) << '\n'
      << "spectral.schur_bound = [" << format_double(r.schur_bound.lo) << ", " << format_double(r.schur_bound.hi)
      << "]\n"
      << "spectral.schur_bound_holds = " << (r.schur_bound_holds ? "true" : "false") << '\n'
      << "spectral.negative_interval = [" << format_double(r.negative_interval.lo) << ", "
      << format_double(r.negative_interval.hi) << "]\n"
      << "spectral.positive_interval = [" << format_double(r.positive_interval.lo) << ", "
      << format_double(r.positive_interval.hi) << "]\n"
      << "spectral.eigenvalues_outside = " << r.eigenvalues_outside << '\n'
      << "spectral.intervals_hold = " << (r.intervals_hold ? "true" : "false") << '\n';
}

int do_check(const CheckArgs& a, std::ostream& out, std::ostream& err) {
  const Problem p = load_problem(a.problem);
  const Solution s = load_solution(a.solution);
  if (s.x.size() != p.n() || s.y.size() != p.m() || s.z.size() != p.n())
    throw DimensionMismatch("solution dimensions do not match the problem");
  const Residuals r = kkt_residuals(p, s.x, s.y, s.z);
  out << "dual_residual = " << format_double(r.dual) << '\n'
      << "primal_residual = " << format_double(r.primal) << '\n'
      << "complementarity_residual = " << format_double(r.complementarity) << '\n'
      << "tol = " << format_double(a.tol) << '\n'
      << "within_tol = " << (r.within(a.tol) ? "true" : "false") << '\n';
  if (a.spectral) {
    try {
      spectral_report(p, s, a, out);
    } catch (const TooLarge& e) {
      err << "spectral diagnostic skipped: " << e.what() << '\n';
    }
  }
  return r.within(a.tol) ? kOk : kNotReached;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse l1-regularized convex QP solver (proximal method of multipliers + semismooth Newton)"};
  app.name("ssnpmm");
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen_cmd = app.add_subcommand("generate", "Write a PDE-constrained control instance as a problem bundle");
  gen_cmd->add_option("family", ga.family, "poisson | convdiff")->required()->check(CLI::IsMember({"poisson", "convdiff"}));
  gen_cmd->add_option("--grid", ga.grid, "Interior grid points per dimension")->required()->check(CLI::Range(2, 1 << 14));
  gen_cmd->add_option("--alpha1", ga.alpha1, "L1 weight")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--alpha2", ga.alpha2, "L2 weight")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--eps", ga.eps, "Diffusion coefficient (convdiff)")->check(CLI::PositiveNumber);
  gen_cmd->add_option("-o,--output", ga.out, "Output directory")->required();

  SolveArgs sa;
  pmm::SolverConfig& c = sa.cfg;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a problem bundle");
  solve_cmd->add_option("problem", sa.problem, "Bundle directory or manifest")->required();
  solve_cmd->add_option("-o,--output", sa.output, "Solution file (default: <bundle>/solution.txt)");
  solve_cmd->add_flag("--json", sa.json, "Emit the report as JSON");
  solve_cmd->add_option("--tol", c.tol)->envname("SSNPMM_TOL")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-pmm", c.max_pmm)->envname("SSNPMM_MAX_PMM")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-ssn", c.max_ssn_per_subproblem)->envname("SSNPMM_MAX_SSN")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--minres-maxit", c.minres_maxit)->envname("SSNPMM_MINRES_MAXIT")->check(CLI::PositiveNumber);
  bool no_warm = false;
  solve_cmd->add_flag("--no-warmstart", no_warm, "Start from zero instead of the pADMM point")
      ->envname("SSNPMM_NO_WARMSTART");
  solve_cmd->add_option("--warmstart-tol", c.warmstart_tol)->envname("SSNPMM_WARMSTART_TOL")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--warmstart-maxit", c.warmstart_maxit)
      ->envname("SSNPMM_WARMSTART_MAXIT")
      ->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--beta0", c.beta0)->envname("SSNPMM_BETA0")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--rho0", c.rho0)->envname("SSNPMM_RHO0")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--seed", c.seed)->envname("SSNPMM_SEED");

  CheckArgs ca;
  auto* check_cmd = app.add_subcommand("check", "Report the optimality residuals of a solution");
  check_cmd->add_option("problem", ca.problem)->required();
  check_cmd->add_option("solution", ca.solution)->required();
  check_cmd->add_option("--tol", ca.tol)->check(CLI::PositiveNumber);
  check_cmd->add_flag("--spectral", ca.spectral, "Eigenvalue bounds of the preconditioned Newton system");
  check_cmd->add_option("--beta", ca.beta, "Penalty used by --spectral")->check(CLI::PositiveNumber);
  check_cmd->add_option("--rho", ca.rho, "Penalty used by --spectral")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "ssnpmm: " << e.what() << '\n';
    err << app.help();
    return kUsage;
  }

  try {
    if (*gen_cmd) return do_generate(ga, out);
    if (*solve_cmd) {
      c.warmstart = !no_warm;
      return do_solve(sa, out);
    }
    if (*check_cmd) return do_check(ca, out, err);
  } catch (const Error& e) {
    err << "ssnpmm: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}

}  // namespace ssnpmm::cli
