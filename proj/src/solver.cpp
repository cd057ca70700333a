#include "hfde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hfde/errors.hpp"

namespace hfde {

double NonlocalCondition::sum_abs_c() const {
  double s = 0.0;
  for (double v : c) s += std::fabs(v);
  return s;
}

std::vector<std::string> ProblemSpec::issues() const {
  std::vector<std::string> out;
  try {
    generator.validate();
  } catch (const Error& e) {
    out.emplace_back(e.what());
  }
  if (!(order.alpha > 0.0 && order.alpha <= 1.0)) out.emplace_back("alpha out of (0,1]");
  if (!(order.beta >= 0.0 && order.beta <= 1.0)) out.emplace_back("beta out of [0,1]");
  if (!std::isfinite(t0)) out.emplace_back("t0 must be finite");
  if (!(a > 0.0) || !std::isfinite(a)) out.emplace_back("interval length a must be positive");
  const int n = generator.a.rows();
  if (nonlocal.u0.size() != n) {
    std::ostringstream os;
    os << "u0 has " << nonlocal.u0.size() << " entries, expected " << n;
    out.push_back(os.str());
  }
  if (rhs.n != n || static_cast<int>(rhs.f.size()) != rhs.n) {
    std::ostringstream os;
    os << "rhs has " << rhs.f.size() << " component expressions, expected " << n;
    out.push_back(os.str());
  }
  if (nonlocal.c.size() != nonlocal.tk.size()) out.emplace_back("nonlocal c and tk must have the same length");
  for (std::size_t k = 0; k < nonlocal.c.size(); ++k) {
    if (nonlocal.c[k] == 0.0 || !std::isfinite(nonlocal.c[k])) {
      std::ostringstream os;
      os << "C_k must be nonzero (k=1,2,...,p): C_" << k + 1 << " = " << nonlocal.c[k];
      out.push_back(os.str());
    }
  }
  for (std::size_t k = 0; k < nonlocal.tk.size(); ++k) {
    const double tk = nonlocal.tk[k];
    if (!(tk > t0 && tk <= t0 + a)) {
      std::ostringstream os;
      os << "t_" << k + 1 << " = " << tk << " outside (t0, t0+a]";
      out.push_back(os.str());
    }
    if (k > 0 && !(tk > nonlocal.tk[k - 1])) {
      std::ostringstream os;
      os << "t_k not strictly increasing at k=" << k + 1;
      out.push_back(os.str());
    }
  }
  if (lipschitz && !(*lipschitz >= 0.0)) out.emplace_back("lipschitz must be nonnegative");
  return out;
}

void ProblemSpec::require_valid() const {
  const auto list = issues();
  if (list.empty()) return;
  std::string msg = "invalid problem: ";
  for (std::size_t i = 0; i < list.size(); ++i) msg += (i ? "; " : "") + list[i];
  throw DomainError(msg);
}

void SolverConfig::validate() const {
  if (grid < 16) throw DomainError("solver: grid must be at least 16");
  if (!(fp_tol > 0.0)) throw DomainError("solver: tol must be positive");
  if (max_iter < 1) throw DomainError("solver: max_iter must be at least 1");
  accuracy.validate();
}

double q_tilde_formula(int r, double m, double lipschitz, double a, double b_norm, double c_tilde,
                       double sum_abs_c) {
  return (1.0 + r) * m * lipschitz * a * a * (1.0 + m * b_norm * c_tilde * sum_abs_c);
}

double c_tilde_constant(double a, double gamma) { return std::pow(a, 1.0 - gamma) * rgamma(2.0 - gamma); }

std::vector<double> solver_nodes(const ProblemSpec& problem, int steps) {
  return uniform_nodes(problem.t0, problem.a, steps, problem.order.gamma());
}

Eigen::VectorXd nonlocal_functional(const GridFunction& g, double gamma, double t) {
  if (gamma < 1.0) return rl_integral_psi(1.0 - gamma, PsiFunction::identity(), g, t);
  return interpolate(g, t);
}

VolterraOperator::VolterraOperator(const ResolventFamily& fam, double t0, double a, int steps)
    : fam_(&fam), t0_(t0), h_(a / steps), steps_(steps), weights_(fam.kernel_weights(a / steps, steps)) {}

Eigen::MatrixXd VolterraOperator::apply(const GridFunction& g, Execution exec) const {
  const int n = fam_->dim();
  const int steps = steps_;
  if (g.dim() != n) throw DomainError("volterra: dimension mismatch");
  const bool origin = g.has_origin();
  if (g.size() != steps + (origin ? 1 : 0)) throw DomainError("volterra: g is not on the solver grid");

  Eigen::MatrixXd r(steps + 1, n);
  Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n);
  bool singular = false;
  if (origin) {
    r = g.values;
  } else {
    const Eigen::VectorXd f1 = g.row(0);
    const Eigen::VectorXd f2 = g.row(1);
    r.bottomRows(steps) = g.values;
    if (g.gamma < 1.0) {
      singular = true;
      const double e = g.gamma - 1.0;
      const double q1 = std::pow(h_, e);
      const double q2 = std::pow(2.0 * h_, e);
      c1 = (f1 - f2) / (q1 - q2);
      r.row(0) = (f1 - q1 * c1).transpose();
      for (int j = 1; j <= steps; ++j) r.row(j) -= std::pow(j * h_, e) * c1.transpose();
    } else {
      r.row(0) = (2.0 * f1 - f2).transpose();
    }
  }
  Eigen::MatrixXd out = convolve(weights_, r, exec);
  if (singular && c1.squaredNorm() > 0.0) {
    for (int i = 1; i <= steps; ++i) out.row(i) += (fam_->k_power_convolution(i * h_, g.gamma) * c1).transpose();
  }
  return out;
}

namespace {

GridFunction grid_of(const std::vector<double>& nodes, double t0, double gamma, Eigen::MatrixXd values) {
  GridFunction g;
  g.t0 = t0;
  g.nodes = nodes;
  g.gamma = gamma;
  g.values = std::move(values);
  return g;
}

SquareMatrix build_B_from(const ProblemSpec& problem, double gamma, const std::vector<double>& nodes,
                          const std::vector<SquareMatrix>& s, double* condition) {
  const int n = problem.dim();
  SquareMatrix m = SquareMatrix::Identity(n, n);
  if (problem.nonlocal.p() > 0) {
    Eigen::MatrixXd flat(static_cast<Eigen::Index>(nodes.size()), n * n);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      flat.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(s[i].data(), n * n);
    const GridFunction sg = grid_of(nodes, problem.t0, gamma, std::move(flat));
    for (int k = 0; k < problem.nonlocal.p(); ++k) {
      const Eigen::VectorXd q = nonlocal_functional(sg, gamma, problem.nonlocal.tk[k]);
      m += problem.nonlocal.c[k] * Eigen::Map<const SquareMatrix>(q.data(), n, n);
    }
  }
  Eigen::JacobiSVD<SquareMatrix> svd(m);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  if (condition) *condition = cond;
  if (!(cond < 1e12)) throw InvertibilityError("build_B: I + sum C_k I^{1-gamma} S(t_k) is near singular", cond);
  return m.inverse();
}

std::vector<SquareMatrix> family_on(const ResolventFamily& fam, const std::vector<double>& nodes, double t0) {
  std::vector<SquareMatrix> s(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) s[i] = fam.s_alpha_beta(nodes[i] - t0);
  return s;
}

}  // namespace

SquareMatrix build_B(const ProblemSpec& problem, const ResolventFamily& fam, int steps, double* condition) {
  const auto nodes = solver_nodes(problem, steps);
  return build_B_from(problem, fam.gamma(), nodes, family_on(fam, nodes, problem.t0), condition);
}

MildMap::MildMap(const ProblemSpec& problem, const SolverConfig& config)
    : problem_((problem.require_valid(), &problem)),
      config_((config.validate(), config)),
      fam_(problem.generator, problem.order, config.accuracy),
      nodes_(solver_nodes(problem, config.grid)),
      s_(family_on(fam_, nodes_, problem.t0)),
      volterra_(fam_, problem.t0, problem.a, config.grid) {
  const auto violations = check_delay_range(problem.rhs, problem.t0, problem.a, nodes_);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "delay map b_" << violations.front().map << " leaves J at " << violations.size()
       << " grid nodes (first t=" << violations.front().t << ")";
    throw DomainError(os.str());
  }
  delay_times_.resize(problem.rhs.r);
  for (int j = 0; j < problem.rhs.r; ++j) {
    delay_times_[j].resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) delay_times_[j][i] = problem.rhs.delay(j + 1, nodes_[i]);
  }
  b_ = build_B_from(problem, fam_.gamma(), nodes_, s_, &b_cond_);
}

GridFunction MildMap::zeros() const {
  return grid_of(nodes_, problem_->t0, gamma(),
                 Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes_.size()), problem_->dim()));
}

GridFunction MildMap::initial_iterate() const {
  GridFunction u = zeros();
  const Eigen::VectorXd v = b_ * problem_->nonlocal.u0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) u.values.row(static_cast<Eigen::Index>(i)) = (s_[i] * v).transpose();
  return u;
}

GridFunction MildMap::rhs_values(const GridFunction& u) const {
  const RhsSpec& rhs = problem_->rhs;
  GridFunction g = zeros();
  Eigen::MatrixXd delayed(rhs.r, problem_->dim());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (int j = 0; j < rhs.r; ++j) delayed.row(j) = interpolate(u, delay_times_[j][i]).transpose();
    try {
      g.values.row(static_cast<Eigen::Index>(i)) = rhs.evaluate(nodes_[i], u.row(static_cast<int>(i)), delayed).transpose();
    } catch (const EvalError& e) {
      std::ostringstream os;
      os << e.what() << " (t=" << nodes_[i] << ")";
      throw EvalError(os.str());
    }
  }
  return g;
}

GridFunction MildMap::convolution(const GridFunction& g) const {
  Eigen::MatrixXd conv = volterra_.apply(g, config_.exec);
  if (gamma() < 1.0) conv = conv.bottomRows(config_.grid).eval();
  return grid_of(nodes_, problem_->t0, gamma(), std::move(conv));
}

Eigen::VectorXd MildMap::nonlocal_vector(const GridFunction& phi) const {
  Eigen::VectorXd rhs = problem_->nonlocal.u0;
  for (int k = 0; k < problem_->nonlocal.p(); ++k)
    rhs -= problem_->nonlocal.c[k] * nonlocal_functional(phi, gamma(), problem_->nonlocal.tk[k]);
  return b_ * rhs;
}

GridFunction MildMap::apply(const GridFunction& u) const {
  if (u.size() != static_cast<int>(nodes_.size()) || u.dim() != problem_->dim())
    throw DomainError("apply_F: trajectory is not on the solver grid");
  GridFunction phi = convolution(rhs_values(u));
  const Eigen::VectorXd v = nonlocal_vector(phi);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    phi.values.row(static_cast<Eigen::Index>(i)) += (s_[i] * v).transpose();
  return phi;
}

Diagnostics contraction_constant(const ProblemSpec& problem, const MildMap& map, const SolverConfig& config) {
  Diagnostics d;
  const double gamma = map.gamma();
  std::vector<double> times;
  for (double t : map.nodes()) times.push_back(t - problem.t0);
  const SupNorm sup = sup_norm_M(map.family(), times);
  d.m = sup.m;
  d.m_weighted = sup.weighted_m;
  d.c_tilde = c_tilde_constant(problem.a, gamma);
  d.b_norm = op_norm(map.B());
  d.b_condition = map.b_condition();

  if (problem.lipschitz) {
    d.lipschitz = *problem.lipschitz;
  } else {
    const GridFunction u0 = map.initial_iterate();
    LipschitzBox box;
    box.lo = u0.values.colwise().minCoeff().transpose().array() - 1.0;
    box.hi = u0.values.colwise().maxCoeff().transpose().array() + 1.0;
    box.lo = box.lo.cwiseMax(-1e6);
    box.hi = box.hi.cwiseMin(1e6);
    box.t_lo = problem.t0;
    box.t_hi = problem.t0 + problem.a;
    d.lipschitz = estimate_lipschitz(problem.rhs, box, config.lipschitz_samples, config.seed).value;
    d.lipschitz_estimated = true;
  }
  const double sum_c = problem.nonlocal.sum_abs_c();
  const int r = problem.rhs.r;
  d.q_tilde = q_tilde_formula(r, d.m, d.lipschitz, problem.a, d.b_norm, d.c_tilde, sum_c);
  d.q_mid_proof = d.lipschitz * d.m * r * problem.a * (1.0 + d.m * d.b_norm * d.c_tilde * sum_c);
  d.contraction_satisfied = d.q_tilde < 1.0;
  d.heuristic = !d.contraction_satisfied || d.lipschitz_estimated;
  return d;
}

namespace {

struct PicardRun {
  GridFunction u;
  std::vector<double> residuals;
  bool converged = false;
};

PicardRun picard(const MildMap& map, GridFunction u, double tol, int max_iter) {
  PicardRun run;
  const double gamma = map.gamma();
  for (int it = 0; it < max_iter; ++it) {
    GridFunction next = map.apply(u);
    GridFunction diff = next;
    diff.values -= u.values;
    const double d = weighted_norm(diff, gamma);
    run.residuals.push_back(d);
    u = std::move(next);
    if (!std::isfinite(d)) break;
    if (d < tol) {
      run.converged = true;
      break;
    }
  }
  run.u = std::move(u);
  return run;
}

}  // namespace

Solution solve_mild(const ProblemSpec& problem, const SolverConfig& config) {
  const MildMap map(problem, config);
  Diagnostics d = contraction_constant(problem, map, config);
  PicardRun run = picard(map, map.initial_iterate(), config.fp_tol, config.max_iter);
  d.iteration_residuals = run.residuals;
  d.iterations = static_cast<int>(run.residuals.size());
  for (std::size_t n = 1; n < run.residuals.size(); ++n) {
    const double ratio = run.residuals[n - 1] > 0.0 ? run.residuals[n] / run.residuals[n - 1] : 0.0;
    d.ratios.push_back(ratio);
    if (n >= 2) d.observed_ratio = std::max(d.observed_ratio, ratio);
  }
  if (!run.converged) {
    std::ostringstream os;
    os << "Picard iteration did not reach tol=" << config.fp_tol << " within " << config.max_iter << " iterations";
    throw IterationError(os.str(), run.residuals);
  }
  d.converged = true;
  if (d.q_tilde < 1.0) d.banach_bound = d.q_tilde / (1.0 - d.q_tilde) * run.residuals.back();

  if (config.uniqueness_probe) {
    PicardRun other = picard(map, map.zeros(), config.fp_tol, config.max_iter);
    if (other.converged) {
      GridFunction diff = other.u;
      diff.values -= run.u.values;
      d.uniqueness_gap = weighted_norm(diff, map.gamma());
    }
  }
  d.uniqueness_verified = d.contraction_satisfied && !d.lipschitz_estimated && d.uniqueness_gap >= 0.0 &&
                          d.uniqueness_gap < 10.0 * config.fp_tol;
  return {std::move(run.u), std::move(d)};
}

GridFunction solve_linear(const ResolventFamily& fam, double t0, double a, int steps, const Eigen::VectorXd& x,
                          const GridFunction& g, Execution exec) {
  if (x.size() != fam.dim()) throw DomainError("solve_linear: dimension mismatch");
  const VolterraOperator vop(fam, t0, a, steps);
  Eigen::MatrixXd conv = vop.apply(g, exec);
  const double gamma = fam.gamma();
  const auto nodes = uniform_nodes(t0, a, steps, gamma);
  if (gamma < 1.0) conv = conv.bottomRows(steps).eval();
  for (std::size_t i = 0; i < nodes.size(); ++i)
    conv.row(static_cast<Eigen::Index>(i)) += (fam.s_alpha_beta(nodes[i] - t0) * x).transpose();
  return grid_of(nodes, t0, gamma, std::move(conv));
}

}  // namespace hfde
