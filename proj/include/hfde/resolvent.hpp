#pragma once

// The operator families K_alpha, G_alpha and S_{alpha,beta} generated by -A
// for a matrix A, by the Mittag-Leffler closed form and by subordination,
// and residual checks of the resolvent axioms.

#include <span>
#include <string>
#include <vector>

#include "hfde/frac_calc.hpp"
#include "hfde/kernels.hpp"
#include "hfde/special_fn.hpp"

namespace hfde {

/// A together with the pair (M~, growth) of the class G(M~, growth).
struct Generator {
  SquareMatrix a;
  double mtilde = 1.0;
  double growth = 0.0;

  int dim() const { return static_cast<int>(a.rows()); }
  void validate() const;
};

struct GeneratorCheck {
  bool admissible = true;
  double worst_ratio = 0.0;  // max ||(A + xi)^-k|| (xi - growth)^k / M~
  std::vector<std::string> issues;
};

/// Samples xi > growth: A + xi I invertible and
/// ||(A + xi)^-k|| <= M~ (xi - growth)^-k for k = 1, 2, 3.
GeneratorCheck check_generator(const Generator& g, int samples = 12);

class ResolventFamily {
 public:
  ResolventFamily(Generator g, OrderParams order, MLAccuracy acc = {});

  /// E_{alpha,b}(-t^alpha A).
  SquareMatrix ml_at(double b, double t) const;

  /// t^(alpha-1) E_{alpha,alpha}(-t^alpha A), t > 0.
  SquareMatrix k_alpha(double t) const;
  /// E_{alpha,alpha}(-t^alpha A), t >= 0.
  SquareMatrix g_alpha(double t) const;
  /// int_0^inf alpha theta M_alpha(theta) exp(-t^alpha theta A) dtheta.
  SquareMatrix g_alpha_subordination(double t) const;
  /// t^(gamma-1) E_{alpha,gamma}(-t^alpha A); at t = 0 the limit I when
  /// gamma = 1 and g_{beta+1}(0) I otherwise.
  SquareMatrix s_alpha_beta(double t) const;

  /// int_0^T K_alpha(T - s) s^(mu-1) ds = Gamma(mu) T^(alpha+mu-1) E_{alpha,alpha+mu}(-T^alpha A).
  SquareMatrix k_power_convolution(double big_t, double mu) const;

  /// Exact product-integration weights of int_0^t K_alpha(t - s) r(s) ds for
  /// r piecewise linear on a uniform grid of step h.
  ConvolutionWeights kernel_weights(double h, int steps) const;

  const Generator& generator() const { return gen_; }
  const OrderParams& order() const { return order_; }
  const MLAccuracy& accuracy() const { return acc_; }
  double gamma() const { return order_.gamma(); }
  int dim() const { return gen_.dim(); }

 private:
  Generator gen_;
  OrderParams order_;
  MLAccuracy acc_;
  MatrixMittagLeffler ml_;
};

/// Entrywise I^order of S on a uniform grid of `steps` panels over [0, t].
SquareMatrix integrated_family(const ResolventFamily& fam, double order, double t, int steps);

/// Residual of the functional equation
///   S(s) I^a S(t) - I^a S(s) S(t) - g(s) I^a S(t) + g(t) I^a S(s) = 0
/// with g = g_gamma, using rl_integral_psi on `steps` panels.
double rof_axiom_residual(const ResolventFamily& fam, double s, double t, int steps);

/// ||S(s) S(t) - S(t) S(s)||.
double commutation_residual(const ResolventFamily& fam, double s, double t);

struct GeneratorLimit {
  double residual = 0.0;             // at the smallest t
  std::vector<double> errors;        // ||quotient(t) + A x|| per t
};

/// Quotient (S(t) x - g_gamma(t) x) / g_{alpha+gamma}(t) compared with -A x.
GeneratorLimit generator_limit_residual(const ResolventFamily& fam, const Eigen::VectorXd& x,
                                        std::span<const double> t_small);

struct SupNorm {
  double m = 0.0;           // max ||S(t)||
  double weighted_m = 0.0;  // max t^(1-gamma) ||S(t)||
  double argmax = 0.0;
};

/// Sup of ||S(t)|| over the given times (relative to t0, all > 0 when gamma < 1).
SupNorm sup_norm_M(const ResolventFamily& fam, std::span<const double> times);

struct GrowthCheck {
  bool holds = true;
  double worst_ratio = 0.0;  // max ||S(t)|| / (M~ e^{growth t})
};

GrowthCheck growth_bound_check(const ResolventFamily& fam, std::span<const double> times);

}  // namespace hfde
