#include "ssnpmm/problem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "ssnpmm/errors.hpp"

namespace fs = std::filesystem;

namespace ssnpmm {

double Problem::objective(const Vector& x) const {
  return c.dot(x) + 0.5 * x.dot(Q * x) + d.cwiseProduct(x.cwiseAbs()).sum();
}

double Residuals::max() const { return std::max({dual, primal, complementarity}); }

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "Optimal";
    case SolveStatus::MaxIterations:
      return "MaxIterations";
    case SolveStatus::LinearSolverFailure:
      return "LinearSolverFailure";
  }
  return "Unknown";
}

SolveStatus status_from_string(const std::string& s) {
  if (s == "Optimal") return SolveStatus::Optimal;
  if (s == "MaxIterations") return SolveStatus::MaxIterations;
  if (s == "LinearSolverFailure") return SolveStatus::LinearSolverFailure;
  throw ParseError("unknown solve status '" + s + "'");
}

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

bool all_finite(const SparseMatrix& M) {
  for (int k = 0; k < M.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(M, k); it; ++it)
      if (!std::isfinite(it.value())) return false;
  return true;
}

void expect_size(const char* what, Eigen::Index got, Eigen::Index want) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + " has length " + std::to_string(got) + ", expected " +
                            std::to_string(want));
  }
}

}  // namespace

void validate(const Problem& p) {
  const Eigen::Index n = p.n();
  const Eigen::Index m = p.m();
  if (p.Q.rows() != n || p.Q.cols() != n) throw DimensionMismatch("Q must be n x n");
  if (p.A.rows() != m || p.A.cols() != n) throw DimensionMismatch("A must be m x n");
  expect_size("d", p.d.size(), n);
  expect_size("l", p.l.size(), n);
  expect_size("u", p.u.size(), n);
  if (m > n) throw ValidationError("more equality rows than variables (m > n)");

  if (!all_finite(p.Q) || !all_finite(p.A)) throw ValidationError("Q and A must have finite entries");
  if (!all_finite(p.c) || !all_finite(p.b) || !all_finite(p.d))
    throw ValidationError("c, b and d must be finite");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::isnan(p.l[i]) || std::isnan(p.u[i])) throw ValidationError("NaN in bounds");
    if (p.l[i] == INFINITY || p.u[i] == -INFINITY) throw ValidationError("empty box component");
    if (p.l[i] > p.u[i]) throw ValidationError("l > u at index " + std::to_string(i));
    if (p.d[i] < 0.0) throw ValidationError("negative weight d at index " + std::to_string(i));
  }

  const SparseMatrix diff = SparseMatrix(p.Q.transpose()) - p.Q;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
      if (it.value() != 0.0)
        throw ValidationError("Q is not symmetric at (" + std::to_string(it.row()) + ", " +
                              std::to_string(it.col()) + ")");
}

Residuals kkt_residuals(const Problem& p, const Vector& x, const Vector& y, const Vector& z) {
  expect_size("x", x.size(), p.n());
  expect_size("y", y.size(), p.m());
  expect_size("z", z.size(), p.n());
  Residuals r;
  const Vector grad_step = x - p.c - p.Q * x + p.A.transpose() * y - z;
  r.dual = (x - prox::soft_threshold(grad_step, 1.0, p.d)).norm() / (1.0 + p.c.norm());
  r.primal = (p.A * x - p.b).norm() / (1.0 + p.b.norm());
  r.complementarity =
      (x - prox::project_box(x + z, p.box())).norm() / (1.0 + x.norm() + z.norm());
  return r;
}

namespace io {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_double(std::string_view token) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || end != token.data() + token.size())
    throw ParseError("invalid number '" + std::string(token) + "'");
  return v;
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

}  // namespace

SparseMatrix read_matrix_market(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open matrix file '" + path.string() + "'");
  std::string line;
  if (!std::getline(is, line)) throw ParseError(path.string() + ": empty file");
  auto header = split_ws(line);
  for (auto& h : header) std::transform(h.begin(), h.end(), h.begin(), ::tolower);
  if (header.size() != 5 || header[0] != "%%matrixmarket" || header[1] != "matrix" ||
      header[2] != "coordinate")
    throw ParseError(path.string() + ": expected a coordinate Matrix Market header");
  if (header[3] != "real" && header[3] != "integer")
    throw ParseError(path.string() + ": unsupported field '" + header[3] + "'");
  bool symmetric = false;
  if (header[4] == "symmetric") {
    symmetric = true;
  } else if (header[4] != "general") {
    throw ParseError(path.string() + ": unsupported symmetry '" + header[4] + "'");
  }

  do {
    if (!std::getline(is, line)) throw ParseError(path.string() + ": missing size line");
  } while (line.empty() || line[0] == '%');
  long rows = 0, cols = 0, nnz = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
      throw ParseError(path.string() + ": malformed size line");
  }
  if (symmetric && rows != cols) throw ParseError(path.string() + ": symmetric matrix must be square");

  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(symmetric ? 2 * nnz : nnz));
  long read = 0;
  while (read < nnz && std::getline(is, line)) {
    if (line.empty() || line[0] == '%') continue;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 3) throw ParseError(path.string() + ": malformed entry '" + line + "'");
    long i = 0, j = 0;
    try {
      i = std::stol(tok[0]);
      j = std::stol(tok[1]);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": malformed index in '" + line + "'");
    }
    const double v = parse_double(tok[2]);
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError(path.string() + ": index out of range in '" + line + "'");
    if (symmetric && j > i) throw ParseError(path.string() + ": symmetric file has upper-triangle entry");
    triplets.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
    if (symmetric && i != j) triplets.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1), v);
    ++read;
  }
  if (read != nnz) throw ParseError(path.string() + ": expected " + std::to_string(nnz) + " entries");

  SparseMatrix M(rows, cols);
  M.setFromTriplets(triplets.begin(), triplets.end());
  return M;
}

void write_matrix_market(const SparseMatrix& M, const fs::path& path, bool symmetric) {
  std::vector<Triplet> entries;
  for (int k = 0; k < M.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(M, k); it; ++it)
      if (!symmetric || it.row() >= it.col()) entries.emplace_back(it.row(), it.col(), it.value());

  auto os = open_for_write(path);
  os << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << '\n';
  os << M.rows() << ' ' << M.cols() << ' ' << entries.size() << '\n';
  for (const auto& t : entries)
    os << t.row() + 1 << ' ' << t.col() + 1 << ' ' << format_double(t.value()) << '\n';
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace io

namespace {

using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open '" + path.string() + "'");
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

const std::string& require(const KeyValues& kv, const std::string& key, const fs::path& where) {
  auto it = kv.find(key);
  if (it == kv.end()) throw ParseError(where.string() + ": missing key '" + key + "'");
  return it->second;
}

Vector parse_vector_tokens(const std::string& text) {
  std::istringstream is(text);
  std::vector<double> values;
  std::string tok;
  while (is >> tok) values.push_back(io::parse_double(tok));
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Vector read_vector(const std::string& value, const fs::path& base) {
  if (!value.empty() && value.front() == '@') {
    const fs::path file = base / value.substr(1);
    std::ifstream is(file);
    if (!is) throw ParseError("cannot open vector file '" + file.string() + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_vector_tokens(ss.str());
  }
  return parse_vector_tokens(value);
}

long parse_count(const std::string& s, const char* key) {
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size() || v < 0) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("invalid value for '") + key + "': '" + s + "'");
  }
}

std::string join(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += io::format_double(v[i]);
  }
  return out;
}

void write_vector_file(const Vector& v, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  for (Eigen::Index i = 0; i < v.size(); ++i) os << io::format_double(v[i]) << '\n';
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

Problem load_problem(const fs::path& path) {
  const fs::path manifest = fs::is_directory(path) ? path / "manifest.txt" : path;
  if (!fs::exists(manifest)) throw ParseError("manifest '" + manifest.string() + "' does not exist");
  const fs::path base = manifest.parent_path();
  const KeyValues kv = read_key_values(manifest);

  Problem p;
  if (auto it = kv.find("name"); it != kv.end()) p.name = it->second;
  const long n = parse_count(require(kv, "n", manifest), "n");
  const long m = parse_count(require(kv, "m", manifest), "m");
  p.Q = io::read_matrix_market(base / require(kv, "Q_file", manifest));
  p.A = io::read_matrix_market(base / require(kv, "A_file", manifest));
  p.c = read_vector(require(kv, "c", manifest), base);
  p.b = read_vector(require(kv, "b", manifest), base);
  p.d = read_vector(require(kv, "d", manifest), base);
  p.l = read_vector(require(kv, "l", manifest), base);
  p.u = read_vector(require(kv, "u", manifest), base);

  expect_size("c", p.c.size(), n);
  expect_size("b", p.b.size(), m);
  validate(p);
  return p;
}

void save_problem(const Problem& p, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir.string() + "'");

  io::write_matrix_market(p.Q, dir / "Q.mtx", /*symmetric=*/true);
  io::write_matrix_market(p.A, dir / "A.mtx", /*symmetric=*/false);
  write_vector_file(p.c, dir / "c.txt");
  write_vector_file(p.b, dir / "b.txt");
  write_vector_file(p.d, dir / "d.txt");
  write_vector_file(p.l, dir / "l.txt");
  write_vector_file(p.u, dir / "u.txt");

  std::ofstream os(dir / "manifest.txt");
  if (!os) throw IoError("cannot write manifest in '" + dir.string() + "'");
  os << "name = " << p.name << '\n'
     << "n = " << p.n() << '\n'
     << "m = " << p.m() << '\n'
     << "Q_file = Q.mtx\n"
     << "A_file = A.mtx\n"
     << "c = @c.txt\n"
     << "b = @b.txt\n"
     << "d = @d.txt\n"
     << "l = @l.txt\n"
     << "u = @u.txt\n";
  if (!os) throw IoError("failed writing manifest in '" + dir.string() + "'");
}

void save_solution(const Solution& s, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  const SolveReport& r = s.report;
  os << "status = " << to_string(s.status) << '\n'
     << "n = " << s.x.size() << '\n'
     << "m = " << s.y.size() << '\n'
     << "x = " << join(s.x) << '\n'
     << "y = " << join(s.y) << '\n'
     << "z = " << join(s.z) << '\n'
     << "pmm_iters = " << r.pmm_iters << '\n'
     << "ssn_iters = " << r.ssn_iters << '\n'
     << "minres_calls = " << r.minres_calls << '\n'
     << "minres_iters_total = " << r.minres_iters_total << '\n'
     << "factorizations = " << r.factorizations << '\n'
     << "wall_time_seconds = " << io::format_double(r.wall_time_seconds) << '\n'
     << "residual_dual = " << io::format_double(r.final_residuals.dual) << '\n'
     << "residual_primal = " << io::format_double(r.final_residuals.primal) << '\n'
     << "residual_complementarity = " << io::format_double(r.final_residuals.complementarity) << '\n';
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

Solution load_solution(const fs::path& path) {
  const KeyValues kv = read_key_values(path);
  Solution s;
  s.status = status_from_string(require(kv, "status", path));
  const long n = parse_count(require(kv, "n", path), "n");
  const long m = parse_count(require(kv, "m", path), "m");
  s.x = parse_vector_tokens(require(kv, "x", path));
  s.y = parse_vector_tokens(require(kv, "y", path));
  s.z = parse_vector_tokens(require(kv, "z", path));
  expect_size("x", s.x.size(), n);
  expect_size("y", s.y.size(), m);
  expect_size("z", s.z.size(), n);

  auto optional_count = [&](const char* key) -> long {
    auto it = kv.find(key);
    return it == kv.end() ? 0 : parse_count(it->second, key);
  };
  auto optional_real = [&](const char* key) -> double {
    auto it = kv.find(key);
    return it == kv.end() ? 0.0 : io::parse_double(it->second);
  };
  SolveReport& r = s.report;
  r.pmm_iters = static_cast<int>(optional_count("pmm_iters"));
  r.ssn_iters = static_cast<int>(optional_count("ssn_iters"));
  r.minres_calls = static_cast<int>(optional_count("minres_calls"));
  r.minres_iters_total = optional_count("minres_iters_total");
  r.minres_avg = r.minres_calls > 0 ? static_cast<double>(r.minres_iters_total) / r.minres_calls : 0.0;
  r.factorizations = static_cast<int>(optional_count("factorizations"));
  r.wall_time_seconds = optional_real("wall_time_seconds");
  r.final_residuals = {optional_real("residual_dual"), optional_real("residual_primal"),
                       optional_real("residual_complementarity")};
  return s;
}

}  // namespace ssnpmm
