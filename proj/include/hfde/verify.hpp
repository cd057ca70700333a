#pragma once

// Numerical certificates for a computed trajectory.

#include <string>
#include <vector>

#include "hfde/solver.hpp"

namespace hfde {

struct Certificate {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;  // residual <= tolerance
  std::string details;
};

Certificate make_certificate(std::string name, double residual, double tolerance, std::string details = {});

/// || I^{1-gamma} u(t0+) + sum_k C_k [I^{1-gamma} u](t_k) - u0 ||.
Certificate nonlocal_residual(const ProblemSpec& problem, const GridFunction& u, double tolerance);

/// max over nodes in [t0 + a/10, t0 + a - h] of || D^{alpha,beta} u + A u - f ||
/// against tolerance tol_scale * h.
Certificate ode_residual(const ProblemSpec& problem, const GridFunction& u, double tol_scale = 1.0,
                         Execution exec = Execution::parallel);

/// || u - F(u) || in C_{1-gamma}.
Certificate cross_check_mild(const MildMap& map, const GridFunction& u, double tolerance);

/// diff(t) <= v(t) E_mu(g Gamma(mu) (t - t0)^mu) at every node of diff.
Certificate gronwall_certificate(const GridFunction& diff, const GridFunction& v, double g, double mu);

struct ContinuityInputs {
  double m = 0.0;          // sup ||S||
  double lipschitz = 0.0;  // L
  double k = 1.0;          // delay regularity constant
};

/// sup_t ||u(t+h) - u(t)|| <= delta h E_alpha(M C (1 + r k) Gamma(alpha) a^alpha),
/// with h = stride * grid step and C = max(L, time-Lipschitz constant of f along u).
Certificate continuity_modulus_check(const MildMap& map, const GridFunction& u, int stride,
                                     const ContinuityInputs& in);

/// Envelope for the distance between the solution and the solution with u0
/// replaced by u0 + delta. Needs gamma = 1 and delays with b_j(t) <= t.
Certificate gronwall_dependence_check(const ProblemSpec& problem, const SolverConfig& config,
                                      const GridFunction& u, const Eigen::VectorXd& delta, double lipschitz);

/// Names accepted by run_certificates.
const std::vector<std::string>& certificate_names();

struct SuiteOptions {
  double fp_tol = 1e-10;
  double ode_tol_scale = 1.0;
  double continuity_k = 1.0;
  std::vector<std::string> only;  // empty: all
};

/// Runs the named certificates against a trajectory on the solver grid.
/// Without `only`, continuity runs for alpha = 1 and gronwall for gamma = 1.
std::vector<Certificate> run_certificates(const ProblemSpec& problem, const SolverConfig& config,
                                          const GridFunction& u, const SuiteOptions& options);

}  // namespace hfde
