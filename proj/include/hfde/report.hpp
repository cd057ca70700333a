#pragma once

// Trajectory CSV files and the structured run report.

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hfde/config.hpp"
#include "hfde/verify.hpp"

namespace hfde {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

/// Header t,u_0..u_{n-1},weighted_u_0..; weighted_u = (t - t0)^(1-gamma) u.
void write_trajectory_csv(std::ostream& out, const GridFunction& u);
void write_trajectory_csv(const std::string& path, const GridFunction& u);

/// Reads the t and u columns back; weighted columns are ignored. Throws
/// DomainError on a malformed file.
GridFunction read_trajectory_csv(std::istream& in, double t0, double gamma);
GridFunction read_trajectory_csv(const std::string& path, double t0, double gamma);

struct RunReport {
  std::string command;
  RunConfig config;
  std::optional<Diagnostics> diagnostics;
  std::vector<Certificate> certificates;
  double seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> outputs;  // label, path
  std::vector<std::string> warnings;
};

/// JSON text with a fixed key order.
std::string report_json(const RunReport& report);

}  // namespace hfde
