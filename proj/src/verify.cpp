#include "hfde/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "hfde/errors.hpp"

namespace hfde {

namespace {

std::string fmt(const char* label, double v) {
  std::ostringstream os;
  os.precision(6);
  os << label << "=" << v;
  return os.str();
}

Eigen::MatrixXd delayed_states(const RhsSpec& rhs, const GridFunction& u, double t) {
  Eigen::MatrixXd d(rhs.r, u.dim());
  for (int j = 0; j < rhs.r; ++j) d.row(j) = interpolate(u, rhs.delay(j + 1, t)).transpose();
  return d;
}

GridFunction scalar_grid(const GridFunction& like, const Eigen::VectorXd& values) {
  GridFunction g;
  g.t0 = like.t0;
  g.nodes = like.nodes;
  g.gamma = 1.0;
  g.values = values;
  return g;
}

// int_0^T ||K_alpha(tau)|| dtau via tau = x^(1/alpha).
double kernel_norm_integral(const ResolventFamily& fam, double big_t) {
  if (!(big_t > 0.0)) return 0.0;
  const double alpha = fam.order().alpha;
  auto f = [&](double x) { return op_norm(fam.ml_at(alpha, std::pow(x, 1.0 / alpha))); };
  return boost::math::quadrature::gauss<double, 30>::integrate(f, 0.0, std::pow(big_t, alpha)) / alpha;
}

// Change in the weighted-limit estimate when every other node is dropped.
double weighted_limit_spread(const GridFunction& u, double alpha) {
  if (u.gamma >= 1.0 || u.size() < 16) return 0.0;
  GridFunction coarse;
  coarse.t0 = u.t0;
  coarse.gamma = u.gamma;
  const int m = u.size() / 2;
  coarse.values.resize(m, u.dim());
  for (int i = 0; i < m; ++i) {
    coarse.nodes.push_back(u.nodes[2 * i + 1]);
    coarse.values.row(i) = u.values.row(2 * i + 1);
  }
  const PsiFunction id = PsiFunction::identity();
  return (initial_weighted_value(u, id, alpha) - initial_weighted_value(coarse, id, alpha)).norm();
}

double lipschitz_for(const ProblemSpec& problem, const MildMap& map, const SolverConfig& config) {
  if (problem.lipschitz) return *problem.lipschitz;
  return contraction_constant(problem, map, config).lipschitz;
}

}  // namespace

Certificate make_certificate(std::string name, double residual, double tolerance, std::string details) {
  Certificate c;
  c.name = std::move(name);
  c.residual = residual;
  c.tolerance = tolerance;
  c.passed = residual <= tolerance;
  c.details = std::move(details);
  return c;
}

Certificate nonlocal_residual(const ProblemSpec& problem, const GridFunction& u, double tolerance) {
  const double gamma = problem.order.gamma();
  Eigen::VectorXd lhs = initial_weighted_value(u, PsiFunction::identity(), problem.order.alpha);
  for (int k = 0; k < problem.nonlocal.p(); ++k)
    lhs += problem.nonlocal.c[k] * nonlocal_functional(u, gamma, problem.nonlocal.tk[k]);
  return make_certificate("nonlocal", (lhs - problem.nonlocal.u0).norm(), tolerance);
}

Certificate ode_residual(const ProblemSpec& problem, const GridFunction& u, double tol_scale, Execution exec) {
  const int n = u.size();
  if (n < 64) throw ResolutionError("ode_residual: need at least 64 nodes");
  const Eigen::MatrixXd d =
      hilfer_derivative_nodes(problem.order, PsiFunction::identity(), u, HilferScheme::by_parts, exec);
  const double h = u.nodes[1] - u.nodes[0];
  const double lo = problem.t0 + 0.1 * problem.a;
  const double hi = problem.t0 + problem.a - h * (1.0 - 1e-9);
  double worst = 0.0;
  double at = problem.t0;
  for (int i = 0; i < n; ++i) {
    const double t = u.nodes[i];
    if (t < lo || t > hi) continue;
    const Eigen::VectorXd ui = u.row(i);
    const Eigen::VectorXd f = problem.rhs.evaluate(t, ui, delayed_states(problem.rhs, u, t));
    const double r = (d.row(i).transpose() + problem.generator.a * ui - f).norm();
    if (!(r <= worst)) {
      worst = r;
      at = t;
    }
  }
  const double tol = tol_scale * h;
  std::ostringstream os;
  os << fmt("max_at_t", at) << " " << fmt("C=residual*N", worst / (h / problem.a));
  return make_certificate("ode", worst, tol, os.str());
}

Certificate cross_check_mild(const MildMap& map, const GridFunction& u, double tolerance) {
  GridFunction diff = map.apply(u);
  diff.values -= u.values;
  return make_certificate("fixed_point", weighted_norm(diff, map.gamma()), tolerance);
}

Certificate gronwall_certificate(const GridFunction& diff, const GridFunction& v, double g, double mu) {
  if (diff.dim() != 1 || v.dim() != 1) throw DomainError("gronwall_certificate: scalar grid functions expected");
  if ((diff.values.array() < 0.0).any()) throw HypothesisError("gronwall_certificate: diff is negative");
  double excess = 0.0;
  double env_max = 0.0;
  for (int i = 0; i < diff.size(); ++i) {
    const double env = gronwall_envelope(v, g, mu, PsiFunction::identity(), diff.nodes[i]);
    env_max = std::max(env_max, env);
    excess = std::max(excess, diff.values(i, 0) - env);
  }
  std::ostringstream os;
  os << fmt("g", g) << " " << fmt("mu", mu) << " " << fmt("max_envelope", env_max);
  return make_certificate("gronwall", excess, 1e-12 * std::max(1.0, env_max), os.str());
}

Certificate continuity_modulus_check(const MildMap& map, const GridFunction& u, int stride,
                                     const ContinuityInputs& in) {
  if (stride < 1 || stride >= u.size()) throw DomainError("continuity: stride out of range");
  const ProblemSpec& p = map.problem();
  const double alpha = p.order.alpha;
  const double h = stride * (u.nodes[1] - u.nodes[0]);

  const GridFunction f = map.rhs_values(u);
  double n_f = 0.0;
  double time_lip = 0.0;
  for (int i = 0; i < f.size(); ++i) n_f = std::max(n_f, f.values.row(i).norm());
  for (int i = 0; i + 1 < u.size(); ++i) {
    const Eigen::VectorXd ui = u.row(i);
    const Eigen::MatrixXd d = delayed_states(p.rhs, u, u.nodes[i]);
    const double df = (p.rhs.evaluate(u.nodes[i + 1], ui, d) - p.rhs.evaluate(u.nodes[i], ui, d)).norm();
    time_lip = std::max(time_lip, df / (u.nodes[i + 1] - u.nodes[i]));
  }
  const double c = std::max(in.lipschitz, time_lip);
  const double m = in.m;
  const double b_norm = op_norm(map.B());
  const double c_tilde = c_tilde_constant(p.a, map.gamma());
  double nonlocal_part = 0.0;
  for (int k = 0; k < p.nonlocal.p(); ++k)
    nonlocal_part += std::fabs(p.nonlocal.c[k]) * n_f * kernel_norm_integral(map.family(), p.nonlocal.tk[k] - p.t0);
  const double delta = 2.0 * m * (map.B() * p.nonlocal.u0).norm() + m * n_f + 2.0 * m * c_tilde * b_norm * nonlocal_part;
  const double arg = m * c * (1.0 + p.rhs.r * in.k) * std::tgamma(alpha) * std::pow(p.a, alpha);
  const double bound = delta * h * ml_one(alpha, arg);

  double lhs = 0.0;
  for (int i = 0; i + stride < u.size(); ++i) lhs = std::max(lhs, (u.row(i + stride) - u.row(i)).norm());
  std::ostringstream os;
  os << fmt("h", h) << " " << fmt("delta", delta) << " " << fmt("C", c) << " " << fmt("N", n_f);
  return make_certificate("continuity", lhs, bound, os.str());
}

Certificate gronwall_dependence_check(const ProblemSpec& problem, const SolverConfig& config,
                                      const GridFunction& u, const Eigen::VectorXd& delta, double lipschitz) {
  if (problem.order.gamma() != 1.0)
    throw HypothesisError("gronwall dependence: needs gamma = 1 (bounded S near t0)");
  const MildMap map(problem, config);
  for (int j = 1; j <= problem.rhs.r; ++j)
    for (double t : map.nodes())
      if (problem.rhs.delay(j, t) > t) throw HypothesisError("gronwall dependence: delays must satisfy b_j(t) <= t");

  ProblemSpec shifted = problem;
  shifted.nonlocal.u0 = problem.nonlocal.u0 + delta;
  SolverConfig quiet = config;
  quiet.uniqueness_probe = false;
  const Solution other = solve_mild(shifted, quiet);
  const MildMap other_map(shifted, quiet);

  GridFunction dphi = other_map.convolution(other_map.rhs_values(other.u));
  dphi.values -= map.convolution(map.rhs_values(u)).values;
  double corr = 0.0;
  for (int k = 0; k < problem.nonlocal.p(); ++k)
    corr += std::fabs(problem.nonlocal.c[k]) * nonlocal_functional(dphi, 1.0, problem.nonlocal.tk[k]).norm();

  const ResolventFamily& fam = map.family();
  const double alpha = problem.order.alpha;
  const int n = u.size();
  double kappa = 0.0;
  double s_max = 0.0;
  const double scale = op_norm(map.B()) * (delta.norm() + corr);
  Eigen::VectorXd v(n), diff(n);
  for (int i = 0; i < n; ++i) {
    const double tau = u.nodes[i] - problem.t0;
    kappa = std::max(kappa, op_norm(fam.g_alpha(tau)));
    s_max = std::max(s_max, op_norm(fam.s_alpha_beta(tau)));
    v(i) = s_max * scale;
    diff(i) = (other.u.row(i) - u.row(i)).norm();
  }
  const double g = (1.0 + problem.rhs.r) * lipschitz * kappa;
  Certificate c = gronwall_certificate(scalar_grid(u, diff), scalar_grid(u, v), g, alpha);
  c.details += " " + fmt("kappa", kappa) + " " + fmt("max_diff", diff.maxCoeff());
  return c;
}

const std::vector<std::string>& certificate_names() {
  static const std::vector<std::string> names{"nonlocal", "fixed_point", "ode", "continuity", "gronwall"};
  return names;
}

std::vector<Certificate> run_certificates(const ProblemSpec& problem, const SolverConfig& config,
                                          const GridFunction& u, const SuiteOptions& options) {
  for (const auto& name : options.only)
    if (std::find(certificate_names().begin(), certificate_names().end(), name) == certificate_names().end())
      throw DomainError("unknown certificate '" + name + "'");
  const MildMap map(problem, config);
  if (u.size() != static_cast<int>(map.nodes().size()) || u.dim() != problem.dim())
    throw DomainError("trajectory does not match the configured grid and dimension");

  const bool explicit_only = !options.only.empty();
  auto wanted = [&](const std::string& name) {
    return !explicit_only || std::find(options.only.begin(), options.only.end(), name) != options.only.end();
  };
  // the Gronwall envelope needs a trajectory bounded at t0; the linear
  // modulus bound needs a Lipschitz one
  const bool bounded = map.gamma() == 1.0;
  const bool lipschitz_in_time = problem.order.alpha == 1.0;

  std::vector<Certificate> out;
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      out.push_back(body());
    } catch (const Error& e) {
      out.push_back(make_certificate(name, std::numeric_limits<double>::infinity(), 0.0, e.what()));
    }
  };
  if (wanted("nonlocal")) {
    guarded("nonlocal", [&] {
      // gamma < 1: the weighted limit at t0 is extrapolated, allow 4x its two-grid spread
      const double spread = weighted_limit_spread(u, problem.order.alpha);
      Certificate c = nonlocal_residual(problem, u, 10.0 * options.fp_tol + 4.0 * spread);
      if (spread > 0.0) c.details = fmt("extrapolation_spread", spread);
      return c;
    });
  }
  if (wanted("fixed_point")) guarded("fixed_point", [&] { return cross_check_mild(map, u, options.fp_tol); });
  if (wanted("ode")) guarded("ode", [&] { return ode_residual(problem, u, options.ode_tol_scale, config.exec); });
  if (wanted("continuity") && (lipschitz_in_time || explicit_only)) {
    guarded("continuity", [&] {
      std::vector<double> times;
      for (double t : map.nodes()) times.push_back(t - problem.t0);
      ContinuityInputs in;
      in.m = sup_norm_M(map.family(), times).m;
      in.lipschitz = lipschitz_for(problem, map, config);
      in.k = options.continuity_k;
      return continuity_modulus_check(map, u, 1, in);
    });
  }
  if (wanted("gronwall") && (bounded || explicit_only)) {
    guarded("gronwall", [&] {
      const Eigen::VectorXd delta =
          Eigen::VectorXd::Constant(problem.dim(), 1e-3 / std::sqrt(static_cast<double>(problem.dim())));
      return gronwall_dependence_check(problem, config, u, delta, lipschitz_for(problem, map, config));
    });
  }
  return out;
}

}  // namespace hfde
