#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ssnpmm/problem.hpp"

namespace ssnpmm::cli {

enum ExitCode : int { kOk = 0, kNotReached = 1, kUsage = 2, kFailure = 3 };

/// Key-value report with the columns PMM, SSN, MINRES, MINRES_avg, Factorizations, Time.
void write_report(const Solution& s, std::ostream& out);
void write_report_json(const Solution& s, std::ostream& out);

/// Entry point shared by the executable and the tests; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ssnpmm::cli
