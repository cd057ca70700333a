#include "hfde/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hfde {

namespace {

using ordered = nlohmann::ordered_json;

ordered number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

ordered numbers(const std::vector<double>& xs) {
  ordered out = ordered::array();
  for (double x : xs) out.push_back(number(x));
  return out;
}

ordered matrix(const Eigen::MatrixXd& m) {
  ordered out = ordered::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered row = ordered::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number(m(i, j)));
    out.push_back(row);
  }
  return out;
}

ordered problem_echo(const RunConfig& cfg) {
  const ProblemSpec& p = cfg.problem;
  ordered o;
  o["generator"] = {{"A", matrix(p.generator.a)}, {"mtilde", p.generator.mtilde}, {"growth", p.generator.growth}};
  o["order"] = {{"alpha", p.order.alpha}, {"beta", p.order.beta}, {"gamma", p.order.gamma()}};
  std::vector<double> u0(p.nonlocal.u0.data(), p.nonlocal.u0.data() + p.nonlocal.u0.size());
  o["nonlocal"] = {{"t0", p.t0}, {"a", p.a}, {"u0", numbers(u0)}, {"c", numbers(p.nonlocal.c)},
                   {"tk", numbers(p.nonlocal.tk)}};
  ordered rhs;
  rhs["f"] = p.rhs.f_src;
  rhs["delays"] = p.rhs.b_src;
  rhs["lipschitz"] = p.lipschitz ? number(*p.lipschitz) : ordered(nullptr);
  o["rhs"] = rhs;
  return o;
}

ordered diagnostics_json(const Diagnostics& d) {
  ordered o;
  o["converged"] = d.converged;
  o["iterations"] = d.iterations;
  o["q_tilde"] = number(d.q_tilde);
  o["q_mid_proof"] = number(d.q_mid_proof);
  o["contraction_satisfied"] = d.contraction_satisfied;
  o["heuristic"] = d.heuristic;
  o["lipschitz"] = number(d.lipschitz);
  o["lipschitz_estimated"] = d.lipschitz_estimated;
  o["M"] = number(d.m);
  o["M_weighted"] = number(d.m_weighted);
  o["C_tilde"] = number(d.c_tilde);
  o["B_norm"] = number(d.b_norm);
  o["B_condition"] = number(d.b_condition);
  o["uniqueness_verified"] = d.uniqueness_verified;
  o["uniqueness_gap"] = number(d.uniqueness_gap);
  o["observed_ratio"] = number(d.observed_ratio);
  o["banach_bound"] = number(d.banach_bound);
  o["iteration_residuals"] = numbers(d.iteration_residuals);
  o["ratios"] = numbers(d.ratios);
  return o;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, int line) {
  double x = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, x);
  if (ec != std::errc() || ptr != end)
    throw DomainError("trajectory line " + std::to_string(line) + ": bad number '" + cell + "'");
  return x;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void write_trajectory_csv(std::ostream& out, const GridFunction& u) {
  const int n = u.dim();
  out << "t";
  for (int j = 0; j < n; ++j) out << ",u_" << j;
  for (int j = 0; j < n; ++j) out << ",weighted_u_" << j;
  out << "\n";
  for (int i = 0; i < u.size(); ++i) {
    const double t = u.nodes[i];
    const double w = u.gamma >= 1.0 ? 1.0 : std::pow(t - u.t0, 1.0 - u.gamma);
    out << format_double(t);
    for (int j = 0; j < n; ++j) out << "," << format_double(u.values(i, j));
    for (int j = 0; j < n; ++j) out << "," << format_double(w * u.values(i, j));
    out << "\n";
  }
}

void write_trajectory_csv(const std::string& path, const GridFunction& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write '" + path + "'");
  write_trajectory_csv(out, u);
  if (!out) throw DomainError("write failed for '" + path + "'");
}

GridFunction read_trajectory_csv(std::istream& in, double t0, double gamma) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("trajectory: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.empty() || header[0] != "t" || (header.size() - 1) % 2 != 0 || header.size() < 3)
    throw DomainError("trajectory: header must be t,u_0..,weighted_u_0..");
  const int n = static_cast<int>(header.size() - 1) / 2;
  for (int j = 0; j < n; ++j) {
    if (header[1 + j] != "u_" + std::to_string(j) || header[1 + n + j] != "weighted_u_" + std::to_string(j))
      throw DomainError("trajectory: header must be t,u_0..,weighted_u_0..");
  }
  std::vector<double> t;
  std::vector<double> flat;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw DomainError("trajectory line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                        " columns");
    t.push_back(parse_cell(cells[0], line_no));
    for (int j = 0; j < n; ++j) flat.push_back(parse_cell(cells[1 + j], line_no));
  }
  if (t.empty()) throw DomainError("trajectory: no data rows");
  GridFunction g;
  g.t0 = t0;
  g.gamma = gamma;
  g.nodes = std::move(t);
  g.values.resize(static_cast<Eigen::Index>(g.nodes.size()), n);
  for (Eigen::Index i = 0; i < g.values.rows(); ++i)
    for (int j = 0; j < n; ++j) g.values(i, j) = flat[static_cast<std::size_t>(i) * n + j];
  return g;
}

GridFunction read_trajectory_csv(const std::string& path, double t0, double gamma) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open trajectory '" + path + "'");
  return read_trajectory_csv(in, t0, gamma);
}

std::string report_json(const RunReport& report) {
  ordered o;
  o["command"] = report.command;
  o["problem"] = problem_echo(report.config);
  const SolverConfig& s = report.config.solver;
  o["grid"] = {{"steps", s.grid},
               {"step", report.config.problem.a / s.grid},
               {"t0", report.config.problem.t0},
               {"t_end", report.config.problem.t0 + report.config.problem.a},
               {"includes_t0", report.config.problem.order.gamma() >= 1.0}};
  o["solver"] = {{"tol", s.fp_tol},   {"max_iter", s.max_iter},   {"seed", s.seed},
                 {"samples", s.lipschitz_samples}, {"ml_tol", s.accuracy.tol}, {"continuity_k", report.config.continuity_k}};
  o["diagnostics"] = report.diagnostics ? diagnostics_json(*report.diagnostics) : ordered(nullptr);
  ordered certs = ordered::array();
  bool all = true;
  for (const auto& c : report.certificates) {
    certs.push_back({{"name", c.name},
                     {"residual", number(c.residual)},
                     {"tolerance", number(c.tolerance)},
                     {"verdict", c.passed ? "pass" : "fail"},
                     {"details", c.details}});
    all = all && c.passed;
  }
  o["certificates"] = certs;
  if (!report.certificates.empty()) o["all_passed"] = all;
  o["warnings"] = report.warnings;
  ordered outs;
  for (const auto& [label, path] : report.outputs) outs[label] = path;
  o["outputs"] = report.outputs.empty() ? ordered::object() : outs;
  o["seconds"] = report.seconds;
  return o.dump(2) + "\n";
}

}  // namespace hfde
