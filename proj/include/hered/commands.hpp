// Subcommand orchestration shared by the C API and the command-line tool.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hered/report.hpp"

namespace hered {

struct CommandResult {
  json report;                                              // carries "schema": 1
  std::vector<TrendTable> tables;                           // CSV sidecars
  std::vector<std::pair<std::string, std::string>> files;   // extra sidecars (name, text)
  int exit_code = 0;
};

// Command names: "kernel check", "kernel invert", "shift membership", "model build",
// "ergodic probe", "example signs", "report bundle". `args` is a flat object of flag
// values (spec, spec_file, N, tol, a, b, p, q, s, nmax, operator, degree, pattern,
// eps, seed, weights, dim, forward, vectors, base_dir).
CommandResult run_command(const std::string& name, const json& args);
const std::vector<std::string>& command_names();

// Exit class of an error thrown by run_command: 3 for malformed input, else 1.
int error_exit_code(const std::exception& e);
json error_report(const std::string& command, const std::exception& e);

}  // namespace hered
