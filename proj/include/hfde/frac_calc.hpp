#pragma once

// Discrete psi-Riemann-Liouville integrals, psi-Hilfer derivatives, the
// weighted C_{1-gamma} norm and the Mittag-Leffler Gronwall envelope.
//
// Weighted norms use (t - t0)^(1-gamma), shifted to the left end of the
// problem interval, so that trajectories singular at t0 have finite norm.

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hfde/kernels.hpp"

namespace hfde {

struct PsiFunction {
  std::function<double(double)> psi;
  std::function<double(double)> dpsi;

  static PsiFunction identity();
  /// psi(t) = t^p, p > 0, for t >= 0.
  static PsiFunction power(double p);

  /// Strictly increasing with positive derivative at every node.
  void validate_on(std::span<const double> nodes) const;
};

struct OrderParams {
  double alpha = 1.0;  // (0, 1]
  double beta = 0.0;   // [0, 1]

  double gamma() const { return alpha + beta * (1.0 - alpha); }
  void validate() const;
};

/// gamma = alpha + beta (1 - alpha).
double gamma_param(double alpha, double beta);

/// Reciprocal-power model of a trajectory on a time grid.
///
/// `gamma` records the expected behaviour at t0: values ~ (t - t0)^(gamma-1).
/// When gamma < 1 the grid must not contain t0; the first panel [t0, tau_1]
/// is then modelled as c1 (psi(t)-psi(t0))^(gamma-1) + c2 fitted to the first
/// two nodes. With gamma == 1 and t0 absent, the first two nodes are
/// extrapolated linearly.
struct GridFunction {
  double t0 = 0.0;
  std::vector<double> nodes;
  Eigen::MatrixXd values;  // one row per node
  double gamma = 1.0;

  int dim() const { return static_cast<int>(values.cols()); }
  int size() const { return static_cast<int>(nodes.size()); }
  bool has_origin() const { return !nodes.empty() && nodes.front() == t0; }
  Eigen::VectorXd row(int i) const { return values.row(i).transpose(); }

  void validate() const;
};

/// Uniform grid t0 + i h, i = first..N with h = a / N; first = 0 when gamma == 1.
std::vector<double> uniform_nodes(double t0, double a, int n_steps, double gamma);

/// (I^{order; psi} f)(x) by product integration: f linear in psi between
/// nodes, weight integrated exactly.
Eigen::VectorXd rl_integral_psi(double order, const PsiFunction& psi, const GridFunction& f, double x);

/// rl_integral_psi at every node of f; rows follow f.nodes.
Eigen::MatrixXd rl_integral_psi_nodes(double order, const PsiFunction& psi, const GridFunction& f,
                                      Execution exec = Execution::parallel);

/// Weighted limit I^{1-gamma} f (t0+) = Gamma(gamma) lim (psi(t)-psi(t0))^(1-gamma) f(t).
/// Exact node value when t0 is a node; for gamma == 1 linear extrapolation;
/// otherwise fitted on the first nodes with the basis
/// {w^(gamma-1), w^(gamma-1+alpha), w^alpha, w^(gamma-1+2 alpha)}.
Eigen::VectorXd initial_weighted_value(const GridFunction& f, const PsiFunction& psi, double alpha);

enum class HilferScheme {
  /// I^{beta(1-alpha)} ((1/psi') d/dx) I^{(1-beta)(1-alpha)} f with 3-point differences.
  composition,
  /// Same operator with the outer integral integrated by parts:
  /// (1/psi') d/dx I^{1-alpha} f - [I^{1-gamma} f](t0+) w^{gamma-alpha-1} / Gamma(gamma-alpha).
  /// The difference quotient then acts on the smoother I^{1-alpha} f.
  by_parts,
};

/// psi-Hilfer derivative of order alpha in (0,1] and type beta at x.
/// alpha == 1 is the plain (psi-scaled) first derivative.
Eigen::VectorXd hilfer_derivative_psi(const OrderParams& op, const PsiFunction& psi, const GridFunction& f,
                                      double x, HilferScheme scheme = HilferScheme::composition);

/// hilfer_derivative_psi at every node; rows where the derivative is not
/// resolvable (t0 itself) are NaN.
Eigen::MatrixXd hilfer_derivative_nodes(const OrderParams& op, const PsiFunction& psi, const GridFunction& f,
                                        HilferScheme scheme, Execution exec = Execution::parallel);

/// max_i (tau_i - t0)^(1-gamma) |f_i|_2.
double weighted_norm(const GridFunction& f, double gamma);

/// v(t) E_mu(g Gamma(mu) (psi(t) - psi(t0))^mu); v scalar and nondecreasing.
double gronwall_envelope(const GridFunction& v, double g, double mu, const PsiFunction& psi, double t);

/// Linear interpolation of row values at t inside the node span.
Eigen::VectorXd interpolate(const GridFunction& f, double t);

}  // namespace hfde
