#include "hfde/frac_calc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hfde/errors.hpp"
#include "hfde/special_fn.hpp"

namespace hfde {

PsiFunction PsiFunction::identity() {
  return {[](double t) { return t; }, [](double) { return 1.0; }};
}

PsiFunction PsiFunction::power(double p) {
  if (!(p > 0.0)) throw DomainError("psi power: exponent must be positive");
  return {[p](double t) { return std::pow(t, p); }, [p](double t) { return p * std::pow(t, p - 1.0); }};
}

void PsiFunction::validate_on(std::span<const double> nodes) const {
  if (!psi || !dpsi) throw DomainError("psi: missing function");
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double v = psi(nodes[i]);
    if (!(v > prev)) throw DomainError("psi: not strictly increasing on the grid");
    prev = v;
    const double d = dpsi(nodes[i]);
    // psi'(t0) = 0 is allowed (e.g. t^2 at the origin): the weight vanishes there.
    if (!(d > 0.0) && !(i == 0 && d == 0.0)) throw DomainError("psi: derivative not positive on the grid");
  }
}

void OrderParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("order: alpha out of (0,1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("order: beta out of [0,1]");
}

double gamma_param(double alpha, double beta) {
  OrderParams{alpha, beta}.validate();
  return alpha + beta * (1.0 - alpha);
}

void GridFunction::validate() const {
  if (nodes.size() < 2) throw DomainError("grid function: need at least two nodes");
  if (static_cast<std::size_t>(values.rows()) != nodes.size())
    throw DomainError("grid function: values/nodes size mismatch");
  if (values.cols() < 1) throw DomainError("grid function: empty state dimension");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("grid function: gamma out of [0,1]");
  if (nodes.front() < t0) throw DomainError("grid function: nodes start before t0");
  if (gamma < 1.0 && nodes.front() == t0)
    throw DomainError("grid function: singular (gamma<1) trajectory cannot hold a node at t0");
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) throw DomainError("grid function: nodes not strictly increasing");
  if (!values.allFinite()) throw DomainError("grid function: non-finite values");
}

std::vector<double> uniform_nodes(double t0, double a, int n_steps, double gamma) {
  if (!(a > 0.0) || n_steps < 1) throw DomainError("uniform grid: need a > 0 and at least one step");
  const double h = a / n_steps;
  std::vector<double> nodes;
  nodes.reserve(n_steps + 1);
  for (int i = gamma < 1.0 ? 1 : 0; i <= n_steps; ++i) nodes.push_back(t0 + i * h);
  nodes.back() = t0 + a;
  return nodes;
}

namespace {

// f on [t0, last node] as c1 w^(gamma-1) + r(w), r piecewise linear in w
// with a node at w = 0.
struct PanelModel {
  std::vector<double> w;
  Eigen::MatrixXd r;  // rows follow w
  Eigen::VectorXd c1;
  double gamma = 1.0;
  bool singular = false;
};

PanelModel build_model(const GridFunction& f, const PsiFunction& psi) {
  PanelModel m;
  const int n = f.size();
  const double p0 = psi.psi(f.t0);
  m.gamma = f.gamma;
  m.c1 = Eigen::VectorXd::Zero(f.dim());
  if (f.has_origin()) {
    m.w.resize(n);
    for (int i = 0; i < n; ++i) m.w[i] = psi.psi(f.nodes[i]) - p0;
    m.w[0] = 0.0;
    m.r = f.values;
    return m;
  }
  m.w.resize(n + 1);
  m.w[0] = 0.0;
  for (int i = 0; i < n; ++i) m.w[i + 1] = psi.psi(f.nodes[i]) - p0;
  m.r.resize(n + 1, f.dim());
  const double w1 = m.w[1];
  const double w2 = m.w[2];
  const Eigen::VectorXd f1 = f.row(0);
  const Eigen::VectorXd f2 = f.row(1);
  if (f.gamma < 1.0) {
    m.singular = true;
    const double e = f.gamma - 1.0;
    const double q1 = std::pow(w1, e);
    const double q2 = std::pow(w2, e);
    m.c1 = (f1 - f2) / (q1 - q2);
    m.r.row(0) = (f1 - m.c1 * q1).transpose();
    for (int i = 0; i < n; ++i) m.r.row(i + 1) = f.values.row(i) - std::pow(m.w[i + 1], e) * m.c1.transpose();
  } else {
    m.r.row(0) = (f1 - (f2 - f1) * (w1 / (w2 - w1))).transpose();
    m.r.bottomRows(n) = f.values;
  }
  return m;
}

// (I^order f)(x) with W = psi(x) - psi(t0); out has the state dimension.
void evaluate_model(const PanelModel& m, double order, double big_w, Eigen::Ref<Eigen::VectorXd> out) {
  out.setZero();
  const double nu = order;
  for (std::size_t k = 0; k + 1 < m.w.size(); ++k) {
    const double a = m.w[k];
    if (!(a < big_w)) break;
    double b = m.w[k + 1];
    double weight_b = 1.0;  // fraction of r_b used at the panel end
    if (b > big_w) {
      weight_b = (big_w - a) / (b - a);
      b = big_w;
    }
    const double da = big_w - a;
    const double db = big_w - b;
    const double delta = b - a;
    const double i0 = (std::pow(da, nu) - std::pow(db, nu)) / nu;
    const double j = (da * i0 - (std::pow(da, nu + 1.0) - std::pow(db, nu + 1.0)) / (nu + 1.0)) / delta;
    // r(w) on the panel is r_a + (r_end - r_a)(w - a)/delta
    const auto ra = m.r.row(k);
    const auto rb = m.r.row(k + 1);
    out += ((i0 - j) * ra + j * (ra + weight_b * (rb - ra))).transpose();
    if (weight_b < 1.0) break;
  }
  out *= rgamma(nu);
  if (m.singular) {
    const double g = m.gamma;
    out += m.c1 * (std::tgamma(g) * rgamma(g + nu) * std::pow(big_w, nu + g - 1.0));
  }
}

void check_span(const GridFunction& f, double x) {
  const double last = f.nodes.back();
  const double slack = 1e-12 * std::max(1.0, std::fabs(last));
  if (!(x >= f.t0 && x <= last + slack)) {
    std::ostringstream os;
    os << "x=" << x << " outside [" << f.t0 << ", " << last << "]";
    throw DomainError(os.str());
  }
}

// Derivative at xe of the quadratic through (x0,y0), (x1,y1), (x2,y2).
Eigen::VectorXd quad_derivative(double x0, double x1, double x2, const Eigen::VectorXd& y0,
                                const Eigen::VectorXd& y1, const Eigen::VectorXd& y2, double xe) {
  const double l0 = ((xe - x1) + (xe - x2)) / ((x0 - x1) * (x0 - x2));
  const double l1 = ((xe - x0) + (xe - x2)) / ((x1 - x0) * (x1 - x2));
  const double l2 = ((xe - x0) + (xe - x1)) / ((x2 - x0) * (x2 - x1));
  return l0 * y0 + l1 * y1 + l2 * y2;
}

// Nodal derivative (in t) of rows of g over `nodes`: central inside,
// one-sided three-point at both ends.
Eigen::MatrixXd nodal_derivative(const std::vector<double>& nodes, const Eigen::MatrixXd& g) {
  const int n = static_cast<int>(nodes.size());
  if (n < 3) throw ResolutionError("derivative stencil needs at least three nodes");
  Eigen::MatrixXd d(n, g.cols());
  for (int i = 0; i < n; ++i) {
    const int c = std::clamp(i, 1, n - 2);
    d.row(i) = quad_derivative(nodes[c - 1], nodes[c], nodes[c + 1], g.row(c - 1).transpose(),
                               g.row(c).transpose(), g.row(c + 1).transpose(), nodes[i])
                   .transpose();
  }
  return d;
}

int find_node(const std::vector<double>& nodes, double x) {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), x);
  int best = -1;
  double gap = std::numeric_limits<double>::infinity();
  for (auto cand : {it, it == nodes.begin() ? it : it - 1}) {
    if (cand == nodes.end()) continue;
    const double d = std::fabs(*cand - x);
    if (d < gap) {
      gap = d;
      best = static_cast<int>(cand - nodes.begin());
    }
  }
  return best;
}

// [I^{nu2} f](t0+) for nu2 = (1-beta)(1-alpha).
Eigen::VectorXd inner_initial_value(const GridFunction& f, const PsiFunction& psi, double alpha, double nu2) {
  if (f.gamma >= 1.0) {
    if (nu2 > 0.0) return Eigen::VectorXd::Zero(f.dim());
    return initial_weighted_value(f, psi, alpha);
  }
  const double e = 1.0 - f.gamma;
  if (std::fabs(nu2 - e) < 1e-12) return initial_weighted_value(f, psi, alpha);
  if (nu2 > e) return Eigen::VectorXd::Zero(f.dim());
  throw DomainError("hilfer: inner integral unbounded at t0 for this trajectory class");
}

}  // namespace

Eigen::VectorXd rl_integral_psi(double order, const PsiFunction& psi, const GridFunction& f, double x) {
  if (!(order > 0.0)) throw DomainError("rl_integral: order must be positive");
  f.validate();
  check_span(f, x);
  psi.validate_on(f.nodes);
  const PanelModel m = build_model(f, psi);
  Eigen::VectorXd out(f.dim());
  evaluate_model(m, order, psi.psi(x) - psi.psi(f.t0), out);
  return out;
}

Eigen::MatrixXd rl_integral_psi_nodes(double order, const PsiFunction& psi, const GridFunction& f, Execution exec) {
  if (!(order > 0.0)) throw DomainError("rl_integral: order must be positive");
  f.validate();
  psi.validate_on(f.nodes);
  const PanelModel m = build_model(f, psi);
  const int n = f.size();
  const double p0 = psi.psi(f.t0);
  std::vector<double> big_w(n);
  for (int i = 0; i < n; ++i) big_w[i] = psi.psi(f.nodes[i]) - p0;
  Eigen::MatrixXd out(n, f.dim());
  if (exec == Execution::parallel) {
#pragma omp parallel
    {
      Eigen::VectorXd buf(f.dim());
#pragma omp for schedule(dynamic, 16)
      for (int i = 0; i < n; ++i) {
        evaluate_model(m, order, big_w[i], buf);
        out.row(i) = buf.transpose();
      }
    }
  } else {
    Eigen::VectorXd buf(f.dim());
    for (int i = 0; i < n; ++i) {
      evaluate_model(m, order, big_w[i], buf);
      out.row(i) = buf.transpose();
    }
  }
  return out;
}

Eigen::VectorXd initial_weighted_value(const GridFunction& f, const PsiFunction& psi, double alpha) {
  f.validate();
  if (f.has_origin()) return f.row(0);
  const double p0 = psi.psi(f.t0);
  const double w1 = psi.psi(f.nodes[0]) - p0;
  const double w2 = psi.psi(f.nodes[1]) - p0;
  if (f.gamma >= 1.0) return f.row(0) - (f.row(1) - f.row(0)) * (w1 / (w2 - w1));

  // Solutions behave like sum_k c_k w^(gamma-1+k alpha) plus a convolution
  // term ~ w^alpha; exponents closer than 0.05 are merged.
  const double g = f.gamma;
  std::vector<double> exps{g - 1.0};
  for (double e : {g - 1.0 + alpha, alpha, g - 1.0 + 2.0 * alpha}) {
    const bool close = std::any_of(exps.begin(), exps.end(), [e](double x) { return std::fabs(x - e) < 0.05; });
    if (!close) exps.push_back(e);
  }
  const int m = std::min<int>(static_cast<int>(exps.size()), f.size());
  Eigen::MatrixXd basis(m, m);
  for (int i = 0; i < m; ++i) {
    const double w = psi.psi(f.nodes[i]) - p0;
    for (int k = 0; k < m; ++k) basis(i, k) = std::pow(w, exps[k]);
  }
  const Eigen::MatrixXd coeffs = basis.fullPivLu().solve(f.values.topRows(m));
  return std::tgamma(g) * coeffs.row(0).transpose();
}

Eigen::VectorXd hilfer_derivative_psi(const OrderParams& op, const PsiFunction& psi, const GridFunction& f,
                                      double x, HilferScheme scheme) {
  op.validate();
  f.validate();
  check_span(f, x);
  psi.validate_on(f.nodes);
  if (f.size() < 3) throw ResolutionError("hilfer: need at least three nodes");
  const double alpha = op.alpha;
  const double dpsi_x = psi.dpsi(x);
  if (!(dpsi_x > 0.0)) throw DomainError("hilfer: psi'(x) must be positive");

  if (alpha == 1.0) {
    const int i = std::clamp(find_node(f.nodes, x), 1, f.size() - 2);
    return quad_derivative(f.nodes[i - 1], f.nodes[i], f.nodes[i + 1], f.row(i - 1), f.row(i), f.row(i + 1), x) /
           dpsi_x;
  }

  const double nu1 = op.beta * (1.0 - alpha);
  const double nu2 = (1.0 - op.beta) * (1.0 - alpha);

  if (scheme == HilferScheme::by_parts) {
    // differentiate I^{1-alpha} f on a local three-point stencil around x
    const int i = find_node(f.nodes, x);
    const double h_left = i > 0 ? f.nodes[i] - f.nodes[i - 1] : f.nodes[i] - f.t0;
    const double h_right = i + 1 < f.size() ? f.nodes[i + 1] - f.nodes[i] : h_left;
    const double h = std::min(h_left, h_right);
    double xs[3] = {x - h, x, x + h};
    if (xs[2] > f.nodes.back()) xs[0] = x - 2 * h, xs[1] = x - h, xs[2] = x;
    if (xs[0] < f.t0) throw ResolutionError("hilfer: x too close to t0 for the difference stencil");
    const PanelModel m = build_model(f, psi);
    const double p0 = psi.psi(f.t0);
    Eigen::VectorXd ys[3];
    for (int k = 0; k < 3; ++k) {
      ys[k].resize(f.dim());
      evaluate_model(m, 1.0 - alpha, psi.psi(xs[k]) - p0, ys[k]);
    }
    Eigen::VectorXd out = quad_derivative(xs[0], xs[1], xs[2], ys[0], ys[1], ys[2], x) / dpsi_x;
    const double g = op.gamma();
    const double coef = rgamma(g - alpha);
    if (coef != 0.0) {
      const Eigen::VectorXd g0 = inner_initial_value(f, psi, alpha, nu2);
      out -= g0 * (coef * std::pow(psi.psi(x) - p0, g - alpha - 1.0));
    }
    return out;
  }

  // composition: inner integral at every node, nodal derivative, outer integral
  Eigen::MatrixXd g = nu2 > 0.0 ? rl_integral_psi_nodes(nu2, psi, f) : f.values;
  Eigen::MatrixXd d = nodal_derivative(f.nodes, g);
  for (int i = 0; i < f.size(); ++i) {
    const double dp = psi.dpsi(f.nodes[i]);
    if (dp > 0.0) d.row(i) /= dp;
  }
  GridFunction dg;
  dg.t0 = f.t0;
  const int skip = f.has_origin() ? 1 : 0;
  dg.nodes.assign(f.nodes.begin() + skip, f.nodes.end());
  dg.values = d.bottomRows(f.size() - skip);
  if (nu1 == 0.0) {
    dg.gamma = 1.0;
    if (x < dg.nodes.front()) throw ResolutionError("hilfer: x before first resolvable node");
    return interpolate(dg, x);
  }
  // derivative of solutions of the Hilfer problem behave like w^(alpha-1) at t0
  dg.gamma = alpha;
  return rl_integral_psi(nu1, psi, dg, x);
}

Eigen::MatrixXd hilfer_derivative_nodes(const OrderParams& op, const PsiFunction& psi, const GridFunction& f,
                                        HilferScheme scheme, Execution exec) {
  op.validate();
  f.validate();
  psi.validate_on(f.nodes);
  const int n = f.size();
  if (n < 3) throw ResolutionError("hilfer: need at least three nodes");
  const double alpha = op.alpha;
  Eigen::MatrixXd out(n, f.dim());

  if (alpha == 1.0) {
    out = nodal_derivative(f.nodes, f.values);
    for (int i = 0; i < n; ++i) {
      const double dp = psi.dpsi(f.nodes[i]);
      out.row(i) = dp > 0.0 ? Eigen::RowVectorXd(out.row(i) / dp)
                            : Eigen::RowVectorXd::Constant(f.dim(), std::numeric_limits<double>::quiet_NaN());
    }
    return out;
  }

  const double nu1 = op.beta * (1.0 - alpha);
  const double nu2 = (1.0 - op.beta) * (1.0 - alpha);
  const double p0 = psi.psi(f.t0);

  if (scheme == HilferScheme::by_parts) {
    const Eigen::MatrixXd big = rl_integral_psi_nodes(1.0 - alpha, psi, f, exec);
    out = nodal_derivative(f.nodes, big);
    const double g = op.gamma();
    const double coef = rgamma(g - alpha);
    const Eigen::VectorXd g0 =
        coef != 0.0 ? inner_initial_value(f, psi, alpha, nu2) : Eigen::VectorXd::Zero(f.dim());
    for (int i = 0; i < n; ++i) {
      const double dp = psi.dpsi(f.nodes[i]);
      const double w = psi.psi(f.nodes[i]) - p0;
      if (!(dp > 0.0) || w == 0.0) {
        out.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      out.row(i) /= dp;
      if (coef != 0.0) out.row(i) -= (g0 * (coef * std::pow(w, g - alpha - 1.0))).transpose();
    }
    return out;
  }

  Eigen::MatrixXd g = nu2 > 0.0 ? rl_integral_psi_nodes(nu2, psi, f, exec) : f.values;
  Eigen::MatrixXd d = nodal_derivative(f.nodes, g);
  for (int i = 0; i < n; ++i) {
    const double dp = psi.dpsi(f.nodes[i]);
    if (dp > 0.0) d.row(i) /= dp;
  }
  const int skip = f.has_origin() ? 1 : 0;
  if (nu1 == 0.0) {
    out = d;
    if (skip) out.row(0).setConstant(std::numeric_limits<double>::quiet_NaN());
    return out;
  }
  GridFunction dg;
  dg.t0 = f.t0;
  dg.nodes.assign(f.nodes.begin() + skip, f.nodes.end());
  dg.values = d.bottomRows(n - skip);
  dg.gamma = alpha;
  const Eigen::MatrixXd outer = rl_integral_psi_nodes(nu1, psi, dg, exec);
  if (skip) out.row(0).setConstant(std::numeric_limits<double>::quiet_NaN());
  out.bottomRows(n - skip) = outer;
  return out;
}

double weighted_norm(const GridFunction& f, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw DomainError("weighted_norm: gamma out of [0,1]");
  double best = 0.0;
  for (int i = 0; i < f.size(); ++i) {
    const double w = std::pow(f.nodes[i] - f.t0, 1.0 - gamma);
    best = std::max(best, w * f.values.row(i).norm());
  }
  return best;
}

Eigen::VectorXd interpolate(const GridFunction& f, double t) {
  const int n = f.size();
  if (n == 0) throw DomainError("interpolate: empty grid function");
  check_span(f, t);
  const double e = 1.0 - f.gamma;
  auto weighted = [&](int i) -> Eigen::VectorXd {
    return e == 0.0 ? f.row(i) : Eigen::VectorXd(std::pow(f.nodes[i] - f.t0, e) * f.row(i));
  };
  if (n == 1) return f.row(0);
  int k;
  if (t <= f.nodes.front()) {
    k = 0;
  } else {
    k = static_cast<int>(std::upper_bound(f.nodes.begin(), f.nodes.end(), t) - f.nodes.begin()) - 1;
    k = std::clamp(k, 0, n - 2);
  }
  const double ta = f.nodes[k];
  const double tb = f.nodes[k + 1];
  const double s = (t - ta) / (tb - ta);
  const Eigen::VectorXd wt = (1.0 - s) * weighted(k) + s * weighted(k + 1);
  if (e == 0.0) return wt;
  return wt / std::pow(t - f.t0, e);
}

double gronwall_envelope(const GridFunction& v, double g, double mu, const PsiFunction& psi, double t) {
  if (v.dim() != 1) throw DomainError("gronwall: v must be scalar");
  if (!(g >= 0.0)) throw DomainError("gronwall: g must be nonnegative");
  if (!(mu > 0.0)) throw DomainError("gronwall: mu must be positive");
  for (int i = 1; i < v.size(); ++i)
    if (v.values(i, 0) < v.values(i - 1, 0)) throw HypothesisError("gronwall: v is not nondecreasing");
  for (int i = 0; i < v.size(); ++i)
    if (v.values(i, 0) < 0.0) throw HypothesisError("gronwall: v is negative");
  const double vt = interpolate(v, t)(0);
  const double arg = g * std::tgamma(mu) * std::pow(psi.psi(t) - psi.psi(v.t0), mu);
  return vt * ml_one(mu, arg);
}

}  // namespace hfde
