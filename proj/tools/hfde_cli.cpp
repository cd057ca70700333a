// hfde: solve and certify fractional evolution problems from a config file.
//
// Exit codes: 0 success, 1 failing certificate, 2 no convergence or
// accuracy failure, 3 configuration or input error.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hfde/config.hpp"
#include "hfde/report.hpp"
#include "hfde/special_fn.hpp"
#include "hfde/verify.hpp"

namespace {

namespace fs = std::filesystem;
using hfde::format_double;

constexpr int kOk = 0;
constexpr int kCertificateFailed = 1;
constexpr int kNotConverged = 2;
constexpr int kInputError = 3;

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<int> grid;
  std::optional<double> tol;
  std::optional<int> max_iter;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Problem file")->required();
  cmd->add_option("--grid", f.grid, "Number of grid steps N");
  cmd->add_option("--tol", f.tol, "Fixed-point tolerance");
  cmd->add_option("--max-iter", f.max_iter, "Iteration cap");
}

hfde::RunConfig load(const CommonFlags& f) {
  hfde::RunConfig cfg = hfde::load_config(f.config);
  if (f.grid) cfg.solver.grid = *f.grid;
  if (f.tol) cfg.solver.fp_tol = *f.tol;
  if (f.max_iter) cfg.solver.max_iter = *f.max_iter;
  cfg.solver.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw hfde::DomainError("cannot write '" + path.string() + "'");
  out << text;
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<std::string> heuristic_warnings(const hfde::Diagnostics& d) {
  std::vector<std::string> w;
  if (d.lipschitz_estimated) w.emplace_back("heuristic: Lipschitz constant estimated by sampling");
  if (!d.contraction_satisfied) w.push_back("heuristic: q_tilde = " + format_double(d.q_tilde) + " >= 1");
  if (d.uniqueness_gap >= 0.0 && !d.uniqueness_verified) w.emplace_back("uniqueness not verified");
  return w;
}

int cmd_solve(const CommonFlags& flags) {
  const auto start = std::chrono::steady_clock::now();
  hfde::RunReport report;
  report.command = "solve";
  report.config = load(flags);
  const fs::path out_dir = flags.out.empty() ? fs::path(".") : fs::path(flags.out);
  fs::create_directories(out_dir);
  const fs::path csv = out_dir / "trajectory.csv";
  const fs::path json = out_dir / "diagnostics.json";

  int code = kOk;
  try {
    const hfde::Solution sol = hfde::solve_mild(report.config.problem, report.config.solver);
    hfde::write_trajectory_csv(csv.string(), sol.u);
    report.diagnostics = sol.diagnostics;
    report.outputs.emplace_back("trajectory", csv.string());
    report.warnings = heuristic_warnings(sol.diagnostics);
  } catch (const hfde::IterationError& e) {
    hfde::Diagnostics d;
    d.iteration_residuals = e.history();
    d.iterations = static_cast<int>(e.history().size());
    report.diagnostics = d;
    report.warnings.emplace_back(e.what());
    code = kNotConverged;
  }
  report.outputs.emplace_back("diagnostics", json.string());
  report.seconds = elapsed(start);
  write_text(json, hfde::report_json(report));

  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  const hfde::Diagnostics& d = *report.diagnostics;
  if (code == kOk) {
    std::cout << "converged in " << d.iterations << " iterations, q_tilde = " << format_double(d.q_tilde)
              << (d.heuristic ? " (heuristic)" : "") << "\n"
              << "wrote " << csv.string() << " and " << json.string() << "\n";
  } else {
    std::cerr << "error: no convergence after " << d.iterations << " iterations\n";
  }
  return code;
}

int cmd_verify(const CommonFlags& flags, const std::string& trajectory, const std::vector<std::string>& only) {
  const auto start = std::chrono::steady_clock::now();
  hfde::RunReport report;
  report.command = "verify";
  report.config = load(flags);
  const hfde::ProblemSpec& p = report.config.problem;

  hfde::GridFunction u = hfde::read_trajectory_csv(trajectory, p.t0, p.order.gamma());
  const auto nodes = hfde::solver_nodes(p, report.config.solver.grid);
  if (u.size() != static_cast<int>(nodes.size()) || u.dim() != p.dim())
    throw hfde::DomainError("trajectory has " + std::to_string(u.size()) + " rows of dimension " +
                            std::to_string(u.dim()) + "; config expects " + std::to_string(nodes.size()) + " of " +
                            std::to_string(p.dim()));
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (std::fabs(u.nodes[i] - nodes[i]) > 1e-12 * (std::fabs(p.t0) + p.a))
      throw hfde::DomainError("trajectory times differ from the configured grid at row " + std::to_string(i + 2));
  u.nodes = nodes;

  hfde::SuiteOptions opts;
  opts.fp_tol = report.config.solver.fp_tol;
  opts.continuity_k = report.config.continuity_k;
  opts.only = only;
  report.certificates = hfde::run_certificates(p, report.config.solver, u, opts);
  report.seconds = elapsed(start);
  report.outputs.emplace_back("trajectory", trajectory);
  if (!flags.out.empty()) {
    fs::create_directories(flags.out);
    const fs::path json = fs::path(flags.out) / "verify.json";
    report.outputs.emplace_back("report", json.string());
    write_text(json, hfde::report_json(report));
  }

  bool all = true;
  for (const auto& c : report.certificates) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " residual=" << format_double(c.residual)
              << " tolerance=" << format_double(c.tolerance);
    if (!c.details.empty()) std::cout << " " << c.details;
    std::cout << "\n";
    all = all && c.passed;
  }
  return all ? kOk : kCertificateFailed;
}

int cmd_mlf(double alpha, double beta, double z) {
  try {
    const hfde::BoundedValue v = hfde::ml_two_bounded(alpha, beta, z);
    std::cout << "E_{" << format_double(alpha) << "," << format_double(beta) << "}(" << format_double(z)
              << ") = " << format_double(v.value) << "\nbound = " << format_double(v.bound) << "\n";
    return kOk;
  } catch (const hfde::AccuracyError& e) {
    std::cerr << "error: " << e.what() << " (partial " << format_double(e.partial()) << ", bound "
              << format_double(e.bound()) << ")\n";
    return kNotConverged;
  }
}

int cmd_check_contraction(const CommonFlags& flags) {
  const hfde::RunConfig cfg = load(flags);
  const hfde::MildMap map(cfg.problem, cfg.solver);
  const hfde::Diagnostics d = hfde::contraction_constant(cfg.problem, map, cfg.solver);
  std::cout << "r = " << cfg.problem.rhs.r << "\n"
            << "M = " << format_double(d.m) << "\n"
            << "L = " << format_double(d.lipschitz) << (d.lipschitz_estimated ? " (estimated)" : "") << "\n"
            << "a = " << format_double(cfg.problem.a) << "\n"
            << "B_norm = " << format_double(d.b_norm) << "\n"
            << "C_tilde = " << format_double(d.c_tilde) << "\n"
            << "sum_abs_C = " << format_double(cfg.problem.nonlocal.sum_abs_c()) << "\n"
            << "q_tilde = " << format_double(d.q_tilde) << "\n"
            << "q_mid_proof = " << format_double(d.q_mid_proof) << "\n"
            << "contraction = " << (d.contraction_satisfied ? "yes" : "no") << (d.heuristic ? " (heuristic)" : "")
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hilfer fractional evolution equations with nonlocal conditions"};
  app.require_subcommand(1);

  CommonFlags solve_flags;
  auto* solve = app.add_subcommand("solve", "Solve and write trajectory.csv and diagnostics.json");
  add_common(solve, solve_flags);
  solve->add_option("--out", solve_flags.out, "Output directory (default: current)");

  CommonFlags verify_flags;
  std::string trajectory;
  std::vector<std::string> only;
  auto* verify = app.add_subcommand("verify", "Run the certificate suite on a trajectory");
  add_common(verify, verify_flags);
  verify->add_option("--trajectory", trajectory, "Trajectory CSV")->required();
  verify->add_option("--only", only, "Run only the named certificate (repeatable)");
  verify->add_option("--out", verify_flags.out, "Directory for verify.json");

  double alpha = 1.0;
  double beta = 1.0;
  double z = 0.0;
  auto* mlf = app.add_subcommand("mlf", "Evaluate E_{alpha,beta}(z) with its error bound");
  mlf->add_option("--alpha", alpha, "alpha > 0")->required();
  mlf->add_option("--beta", beta, "beta > 0 (default 1)");
  mlf->add_option("--z", z, "argument")->required();

  CommonFlags contraction_flags;
  auto* contraction = app.add_subcommand("check-contraction", "Print the contraction constant factors");
  add_common(contraction, contraction_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*solve) return cmd_solve(solve_flags);
    if (*verify) return cmd_verify(verify_flags, trajectory, only);
    if (*mlf) return cmd_mlf(alpha, beta, z);
    if (*contraction) return cmd_check_contraction(contraction_flags);
  } catch (const hfde::ConfigParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
  } catch (const hfde::ConfigError& e) {
    std::cerr << e.what() << "\n";
  } catch (const hfde::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kInputError;
}
