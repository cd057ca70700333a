#include "hfde/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "hfde/errors.hpp"

namespace hfde {

void Generator::validate() const {
  if (a.rows() < 1 || a.rows() != a.cols()) throw DomainError("generator: A must be a nonempty square matrix");
  if (!a.allFinite()) throw DomainError("generator: A has non-finite entries");
  if (!(mtilde > 0.0) || !std::isfinite(mtilde)) throw DomainError("generator: mtilde must be positive");
  if (!std::isfinite(growth)) throw DomainError("generator: growth must be finite");
}

GeneratorCheck check_generator(const Generator& g, int samples) {
  g.validate();
  GeneratorCheck out;
  const int n = g.dim();
  const double scale = 1.0 + op_norm(g.a);
  for (int j = 0; j < samples; ++j) {
    const double delta = scale * std::ldexp(1.0, j - samples / 2);
    const double xi = g.growth + delta;
    const SquareMatrix shifted = g.a + xi * SquareMatrix::Identity(n, n);
    Eigen::JacobiSVD<SquareMatrix> svd(shifted);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || sv(0) / smin > 1e12) {
      std::ostringstream os;
      os << "A + xi I is not invertible at xi=" << xi;
      out.issues.push_back(os.str());
      out.admissible = false;
      continue;
    }
    const SquareMatrix inv = shifted.inverse();
    SquareMatrix power = inv;
    for (int k = 1; k <= 3; ++k) {
      const double ratio = op_norm(power) * std::pow(delta, k) / g.mtilde;
      out.worst_ratio = std::max(out.worst_ratio, ratio);
      if (ratio > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "resolvent bound fails at xi=" << xi << ", k=" << k << " (ratio " << ratio << ")";
        out.issues.push_back(os.str());
        out.admissible = false;
      }
      power = power * inv;
    }
  }
  return out;
}

ResolventFamily::ResolventFamily(Generator g, OrderParams order, MLAccuracy acc)
    : gen_((g.validate(), std::move(g))), order_((order.validate(), order)), acc_(acc), ml_(gen_.a, acc) {}

SquareMatrix ResolventFamily::ml_at(double b, double t) const {
  if (t < 0.0) throw DomainError("resolvent: negative time");
  return ml_.evaluate(order_.alpha, b, -std::pow(t, order_.alpha));
}

SquareMatrix ResolventFamily::k_alpha(double t) const {
  if (!(t > 0.0)) throw DomainError("k_alpha: t must be positive");
  return std::pow(t, order_.alpha - 1.0) * ml_at(order_.alpha, t);
}

SquareMatrix ResolventFamily::g_alpha(double t) const { return ml_at(order_.alpha, t); }

SquareMatrix ResolventFamily::g_alpha_subordination(double t) const {
  if (!(t > 0.0)) throw DomainError("g_alpha_subordination: t must be positive");
  const int n = dim();
  const double alpha = order_.alpha;
  if (alpha == 1.0) return SquareMatrix(-t * gen_.a).exp();
  const double ta = std::pow(t, alpha);

  auto integrand = [&](double theta) -> SquareMatrix {
    const double w = alpha * theta * mainardi(alpha, theta, acc_);
    if (w == 0.0) return SquareMatrix::Zero(n, n);
    return w * SquareMatrix(-ta * theta * gen_.a).exp();
  };

  constexpr double tail_tol = 1e-10;
  double theta_max = 4.0;
  for (;;) {
    const double tail = op_norm(integrand(theta_max)) * theta_max;
    if (tail < tail_tol) break;
    theta_max *= 2.0;
    if (theta_max > 4096.0) throw AccuracyError("g_alpha_subordination: tail bound not met", tail, tail);
  }

  using Rule = boost::math::quadrature::gauss<double, 20>;
  const auto& x = Rule::abscissa();
  const auto& wts = Rule::weights();
  auto integrate = [&](int panels) {
    SquareMatrix sum = SquareMatrix::Zero(n, n);
    const double width = theta_max / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = (p + 0.5) * width;
      const double half = 0.5 * width;
      for (std::size_t k = 0; k < x.size(); ++k) {
        sum += (half * wts[k]) * integrand(mid + half * x[k]);
        if (x[k] != 0.0) sum += (half * wts[k]) * integrand(mid - half * x[k]);
      }
    }
    return sum;
  };

  int panels = 8;
  SquareMatrix prev = integrate(panels);
  for (;;) {
    panels *= 2;
    SquareMatrix next = integrate(panels);
    const double moved = (next - prev).cwiseAbs().maxCoeff();
    if (moved < 1e-8) return next;
    if (panels >= 1024) throw AccuracyError("g_alpha_subordination: panel refinement did not settle", 0.0, moved);
    prev = std::move(next);
  }
}

SquareMatrix ResolventFamily::s_alpha_beta(double t) const {
  if (t < 0.0) throw DomainError("s_alpha_beta: negative time");
  const int n = dim();
  const double g = gamma();
  if (t == 0.0) {
    if (g == 1.0) return SquareMatrix::Identity(n, n);
    return (order_.beta == 0.0 ? 1.0 : 0.0) * SquareMatrix::Identity(n, n);
  }
  return std::pow(t, g - 1.0) * ml_at(g, t);
}

SquareMatrix ResolventFamily::k_power_convolution(double big_t, double mu) const {
  if (!(mu > 0.0)) throw DomainError("k_power_convolution: mu must be positive");
  if (big_t < 0.0) throw DomainError("k_power_convolution: negative time");
  const double e = order_.alpha + mu - 1.0;
  if (big_t == 0.0) {
    if (e > 0.0) return SquareMatrix::Zero(dim(), dim());
    throw DomainError("k_power_convolution: unbounded at T = 0");
  }
  return std::tgamma(mu) * std::pow(big_t, e) * ml_at(order_.alpha + mu, big_t);
}

ConvolutionWeights ResolventFamily::kernel_weights(double h, int steps) const {
  if (!(h > 0.0) || steps < 1) throw DomainError("kernel_weights: need h > 0 and steps >= 1");
  const int n = dim();
  const double alpha = order_.alpha;
  // P0(tau) = int_0^tau K, P1(tau) = int_0^tau s K(s) ds
  std::vector<SquareMatrix> p0(steps + 1), p1(steps + 1);
  p0[0] = SquareMatrix::Zero(n, n);
  p1[0] = SquareMatrix::Zero(n, n);
  for (int m = 1; m <= steps; ++m) {
    const double tau = m * h;
    const SquareMatrix e1 = ml_at(alpha + 1.0, tau);
    const SquareMatrix e2 = ml_at(alpha + 2.0, tau);
    const double ta = std::pow(tau, alpha);
    p0[m] = ta * e1;
    p1[m] = (ta * tau) * (e1 - e2);
  }
  ConvolutionWeights w;
  w.steps = steps;
  w.dim = n;
  const std::size_t block = static_cast<std::size_t>(n) * n;
  w.lower.resize(block * steps);
  w.upper.resize(block * steps);
  for (int m = 0; m < steps; ++m) {
    const double hi = (m + 1) * h;
    const SquareMatrix d0 = p0[m + 1] - p0[m];
    const SquareMatrix d1 = p1[m + 1] - p1[m];
    const SquareMatrix up = (hi * d0 - d1) / h;
    const SquareMatrix lo = d0 - up;
    std::copy(lo.data(), lo.data() + block, w.lower.begin() + block * m);
    std::copy(up.data(), up.data() + block, w.upper.begin() + block * m);
  }
  return w;
}

SquareMatrix integrated_family(const ResolventFamily& fam, double order, double t, int steps) {
  if (!(t > 0.0)) throw DomainError("integrated_family: t must be positive");
  const int n = fam.dim();
  GridFunction f;
  f.t0 = 0.0;
  f.gamma = fam.gamma();
  f.nodes = uniform_nodes(0.0, t, steps, f.gamma);
  f.values.resize(static_cast<Eigen::Index>(f.nodes.size()), n * n);
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    const SquareMatrix s = fam.s_alpha_beta(f.nodes[i]);
    f.values.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(s.data(), n * n);
  }
  const Eigen::VectorXd flat = rl_integral_psi(order, PsiFunction::identity(), f, t);
  return Eigen::Map<const SquareMatrix>(flat.data(), n, n);
}

double rof_axiom_residual(const ResolventFamily& fam, double s, double t, int steps) {
  if (!(s > 0.0 && t > 0.0)) throw DomainError("rof_axiom_residual: s and t must be positive");
  const double alpha = fam.order().alpha;
  const double g = fam.gamma();
  const SquareMatrix ss = fam.s_alpha_beta(s);
  const SquareMatrix st = fam.s_alpha_beta(t);
  const SquareMatrix is = integrated_family(fam, alpha, s, steps);
  const SquareMatrix it = s == t ? is : integrated_family(fam, alpha, t, steps);
  const double gs = std::pow(s, g - 1.0) * rgamma(g);
  const double gt = std::pow(t, g - 1.0) * rgamma(g);
  return op_norm(ss * it - is * st - gs * it + gt * is);
}

double commutation_residual(const ResolventFamily& fam, double s, double t) {
  const SquareMatrix a = fam.s_alpha_beta(s);
  const SquareMatrix b = fam.s_alpha_beta(t);
  return op_norm(a * b - b * a);
}

GeneratorLimit generator_limit_residual(const ResolventFamily& fam, const Eigen::VectorXd& x,
                                        std::span<const double> t_small) {
  if (t_small.empty()) throw DomainError("generator_limit_residual: no sample times");
  if (x.size() != fam.dim()) throw DomainError("generator_limit_residual: dimension mismatch");
  const double alpha = fam.order().alpha;
  const double g = fam.gamma();
  const Eigen::VectorXd target = -fam.generator().a * x;
  GeneratorLimit out;
  double t_min = std::numeric_limits<double>::infinity();
  for (double t : t_small) {
    double err = std::numeric_limits<double>::infinity();
    if (t > 0.0) {
      try {
        const Eigen::VectorXd num = fam.s_alpha_beta(t) * x - (std::pow(t, g - 1.0) * rgamma(g)) * x;
        const Eigen::VectorXd q = num / (std::pow(t, alpha + g - 1.0) * rgamma(alpha + g));
        const double e = (q - target).norm();
        if (std::isfinite(e)) err = e;
      } catch (const AccuracyError&) {
      }
    }
    out.errors.push_back(err);
    if (t < t_min) {
      t_min = t;
      out.residual = err;
    }
  }
  return out;
}

SupNorm sup_norm_M(const ResolventFamily& fam, std::span<const double> times) {
  if (times.empty()) throw DomainError("sup_norm_M: empty grid");
  const double g = fam.gamma();
  SupNorm out;
  for (double t : times) {
    if (t < 0.0) throw DomainError("sup_norm_M: negative time");
    if (t == 0.0 && g < 1.0) continue;
    const double v = op_norm(fam.s_alpha_beta(t));
    if (v > out.m) {
      out.m = v;
      out.argmax = t;
    }
    out.weighted_m = std::max(out.weighted_m, std::pow(t, 1.0 - g) * v);
  }
  return out;
}

GrowthCheck growth_bound_check(const ResolventFamily& fam, std::span<const double> times) {
  const Generator& gen = fam.generator();
  GrowthCheck out;
  for (double t : times) {
    if (t < 0.0) throw DomainError("growth_bound_check: negative time");
    const double ratio = op_norm(fam.s_alpha_beta(t)) / (gen.mtilde * std::exp(gen.growth * t));
    out.worst_ratio = std::max(out.worst_ratio, ratio);
  }
  out.holds = out.worst_ratio <= 1.0 + 1e-12;
  return out;
}

}  // namespace hfde
