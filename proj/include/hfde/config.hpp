#pragma once

// Problem files: sectioned key-value text.
//
//   # comment
//   [generator]
//   A = [[1.0, 0.0], [0.0, 2.0]]   # row list
//   [order]
//   alpha = 0.5
//   [rhs]
//   f = ["-u[0] + sin(t)", "d[1][0]"]
//   delays = ["t / 2"]
//
// Values are JSON literals: numbers, quoted strings, lists. See
// configs/example.cfg for every key.

#include <string>
#include <vector>

#include "hfde/errors.hpp"
#include "hfde/solver.hpp"

namespace hfde {

/// Malformed text; line and column are 1-based.
class ConfigParseError : public Error {
 public:
  ConfigParseError(const std::string& what, int line, int column);
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Well-formed text describing an invalid problem; carries every issue found.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

struct RunConfig {
  ProblemSpec problem;
  SolverConfig solver;
  double continuity_k = 1.0;
};

RunConfig parse_config(const std::string& text);
/// Reads and parses a file; a missing file is a ConfigError.
RunConfig load_config(const std::string& path);

}  // namespace hfde
