#pragma once

// Mild-solution fixed-point map for
//   D^{alpha,beta} u + A u = f(t, u(t), u(b_1(t)), ..., u(b_r(t))),  t in (t0, t0 + a],
//   I^{1-gamma} u(t0+) + sum_k C_k I^{1-gamma} u(t_k) = u0,
// Picard iteration with contraction diagnostics, and the linear
// variation-of-constants solver. The time variable is plain t (psi = id).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hfde/frac_calc.hpp"
#include "hfde/kernels.hpp"
#include "hfde/resolvent.hpp"
#include "hfde/rhs_dsl.hpp"

namespace hfde {

struct NonlocalCondition {
  Eigen::VectorXd u0;
  std::vector<double> c;
  std::vector<double> tk;

  int p() const { return static_cast<int>(c.size()); }
  double sum_abs_c() const;
};

struct ProblemSpec {
  Generator generator;
  OrderParams order;
  double t0 = 0.0;
  double a = 1.0;
  NonlocalCondition nonlocal;
  RhsSpec rhs;
  std::optional<double> lipschitz;

  int dim() const { return generator.dim(); }
  /// Every violated invariant, in a stable order; empty when valid.
  std::vector<std::string> issues() const;
  /// Throws DomainError listing all issues.
  void require_valid() const;
};

struct SolverConfig {
  int grid = 256;          // N, number of steps
  double fp_tol = 1e-10;   // weighted-norm stopping tolerance
  int max_iter = 500;
  MLAccuracy accuracy;
  int lipschitz_samples = 4000;
  std::uint64_t seed = 0x5eed;
  bool uniqueness_probe = true;
  Execution exec = Execution::parallel;

  void validate() const;
};

struct Diagnostics {
  double q_tilde = 0.0;
  double q_mid_proof = 0.0;  // L M r a (1 + M ||B|| C~ sum |C_k|)
  bool contraction_satisfied = false;
  double m = 0.0;            // sup ||S(t)|| over the grid
  double m_weighted = 0.0;   // sup (t-t0)^(1-gamma) ||S(t)||
  double c_tilde = 0.0;
  double b_norm = 0.0;
  double b_condition = 0.0;
  double lipschitz = 0.0;
  bool lipschitz_estimated = false;
  bool heuristic = false;
  bool uniqueness_verified = false;
  double uniqueness_gap = -1.0;  // weighted distance to the iterate started from 0; -1 if not run
  bool converged = false;
  int iterations = 0;
  std::vector<double> iteration_residuals;  // ||u^{n+1} - u^n|| in C_{1-gamma}
  std::vector<double> ratios;               // residuals[n] / residuals[n-1], n >= 1
  double observed_ratio = 0.0;              // max ratio for n >= 2
  double banach_bound = -1.0;               // q/(1-q) ||u^n - u^{n-1}||, -1 when q >= 1
};

/// (1 + r) M L a^2 (1 + M ||B|| C~ sum |C_k|).
double q_tilde_formula(int r, double m, double lipschitz, double a, double b_norm, double c_tilde,
                       double sum_abs_c);

/// a^(1-gamma) / Gamma(2-gamma).
double c_tilde_constant(double a, double gamma);

/// Uniform solver grid t0 + j h; t0 itself only when gamma == 1.
std::vector<double> solver_nodes(const ProblemSpec& problem, int steps);

/// [I^{1-gamma} g](t): order-(1-gamma) integral, or the interpolated value when gamma == 1.
Eigen::VectorXd nonlocal_functional(const GridFunction& g, double gamma, double t);

/// int_{t0}^{t} K_alpha(t - s) g(s) ds at the nodes of a uniform grid; g
/// may be singular like (s-t0)^(g.gamma - 1).
class VolterraOperator {
 public:
  VolterraOperator(const ResolventFamily& fam, double t0, double a, int steps);

  /// g on t0 + j h, j = 0..N (g.gamma == 1) or j = 1..N. Result has N+1
  /// rows (row 0 at t0 is zero).
  Eigen::MatrixXd apply(const GridFunction& g, Execution exec) const;

  int steps() const { return steps_; }
  double step() const { return h_; }
  const ConvolutionWeights& weights() const { return weights_; }

 private:
  const ResolventFamily* fam_;
  double t0_;
  double h_;
  int steps_;
  ConvolutionWeights weights_;
};

/// B = (I + sum_k C_k [I^{1-gamma} S](t_k - t0))^{-1}, with the functional
/// discretised on the solver grid of `steps` panels.
SquareMatrix build_B(const ProblemSpec& problem, const ResolventFamily& fam, int steps,
                     double* condition = nullptr);

/// The operator F of the fixed-point formulation on a uniform grid.
class MildMap {
 public:
  MildMap(const ProblemSpec& problem, const SolverConfig& config);
  MildMap(const MildMap&) = delete;
  MildMap& operator=(const MildMap&) = delete;

  /// S(t - t0) B u0.
  GridFunction initial_iterate() const;
  GridFunction apply(const GridFunction& u) const;
  /// f(s, u(s), u(b_1(s)), ...) at the grid nodes of u.
  GridFunction rhs_values(const GridFunction& u) const;

  /// B (u0 - sum C_k [I^{1-gamma} phi](t_k)) for the convolution phi.
  Eigen::VectorXd nonlocal_vector(const GridFunction& phi) const;
  /// Convolution int K(t-s) g(s) ds as a grid function on the solver nodes.
  GridFunction convolution(const GridFunction& g) const;

  const ProblemSpec& problem() const { return *problem_; }
  const ResolventFamily& family() const { return fam_; }
  const SquareMatrix& B() const { return b_; }
  double b_condition() const { return b_cond_; }
  const std::vector<double>& nodes() const { return nodes_; }
  double gamma() const { return fam_.gamma(); }
  GridFunction zeros() const;

 private:
  const ProblemSpec* problem_;
  SolverConfig config_;
  ResolventFamily fam_;
  std::vector<double> nodes_;
  std::vector<SquareMatrix> s_;       // S(node - t0)
  std::vector<std::vector<double>> delay_times_;  // [map][node]
  VolterraOperator volterra_;
  SquareMatrix b_;
  double b_cond_ = 1.0;
};

/// Fills the q~ factors; L is the user value or a sampled estimate.
Diagnostics contraction_constant(const ProblemSpec& problem, const MildMap& map, const SolverConfig& config);

struct Solution {
  GridFunction u;
  Diagnostics diagnostics;
};

/// Picard iteration from S(t-t0) B u0; throws IterationError on non-convergence.
Solution solve_mild(const ProblemSpec& problem, const SolverConfig& config);

/// S(t - t0) x + int_{t0}^t K(t-s) g(s) ds on the solver grid of `steps` panels.
GridFunction solve_linear(const ResolventFamily& fam, double t0, double a, int steps, const Eigen::VectorXd& x,
                          const GridFunction& g, Execution exec = Execution::parallel);

}  // namespace hfde
