#include "hfde/special_fn.hpp"

#include <cfloat>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <type_traits>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "hfde/errors.hpp"

namespace hfde {

namespace {

using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

constexpr long double kLongEps = std::numeric_limits<long double>::epsilon();

long double log_gamma_l(long double x) {
  int sign = 0;
  return ::lgammal_r(x, &sign);
}

std::string describe(const char* what, double alpha, double beta, double z) {
  std::ostringstream os;
  os << what << " (alpha=" << alpha << ", beta=" << beta << ", z=" << z << ")";
  return os.str();
}

}  // namespace

void MLAccuracy::validate() const {
  if (!(tol > 0.0 && tol <= 1e-3)) throw DomainError("MLAccuracy: tol must lie in (0, 1e-3]");
  if (max_terms < 16) throw DomainError("MLAccuracy: max_terms must be at least 16");
}

double sinpi(double x) {
  const double r = x - 2.0 * std::round(x / 2.0);
  if (r == std::floor(r)) return 0.0;
  return std::sin(std::numbers::pi * r);
}

double rgamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) return 0.0;
  if (x > 0.0) return x < 170.0 ? 1.0 / std::tgamma(x) : std::exp(-std::lgamma(x));
  // reflection: 1/Gamma(x) = Gamma(1 - x) sin(pi x) / pi
  const double s = sinpi(x) / std::numbers::pi;
  if (1.0 - x < 170.0) return std::tgamma(1.0 - x) * s;
  return std::exp(std::lgamma(1.0 - x)) * s;
}

namespace {

struct SeriesResult {
  double value = 0.0;
  double bound = 0.0;
  int terms = 0;
  bool converged = false;
};

// sum z^k / Gamma(alpha k + beta) in the floating type Real, with a running
// bound on the rounding of each term and of the accumulation.
template <class Real>
SeriesResult ml_series(double alpha, double beta, double z, const MLAccuracy& acc) {
  using std::exp;
  using std::fabs;
  using std::log;
  const Real eps = std::numeric_limits<Real>::epsilon();
  const Real ra = alpha;
  const Real rb = beta;
  const Real lz = log(fabs(Real(z)));
  auto lgam = [](const Real& x) {
    if constexpr (std::is_same_v<Real, long double>) {
      return log_gamma_l(x);
    } else {
      return Real(boost::math::lgamma(x));
    }
  };

  SeriesResult out;
  Real sum = 0;
  Real rounding = 0;
  Real lg = lgam(rb);
  Real lm = -lg;
  for (int k = 0; k < acc.max_terms; ++k) {
    const Real mag = exp(lm);
    sum += (z < 0.0 && (k & 1)) ? Real(-mag) : mag;
    // error of exp(k log|z| - lgamma) plus the addition itself
    rounding += mag * eps * (k * fabs(lz) + fabs(lg) + 4) + fabs(sum) * eps;
    const Real lg_next = lgam(ra * (k + 1) + rb);
    const Real lnext = (k + 1) * lz - lg_next;
    const Real ratio = exp(lnext - lm);
    if (ratio < 1) {
      // Gamma(x)/Gamma(x+alpha) decreases in x, so all later ratios are smaller.
      const Real tail = exp(lnext) / (1 - ratio);
      if (tail <= Real(1e-2 * acc.tol) * fabs(sum) || tail <= rounding) {
        out.value = static_cast<double>(sum);
        out.bound = static_cast<double>(tail + rounding) + 0.5 * DBL_EPSILON * std::fabs(out.value);
        out.terms = k + 1;
        out.converged = true;
        return out;
      }
    }
    lm = lnext;
    lg = lg_next;
  }
  out.value = static_cast<double>(sum);
  out.bound = std::numeric_limits<double>::infinity();
  out.terms = acc.max_terms;
  return out;
}

}  // namespace

BoundedValue ml_two_bounded(double alpha, double beta, double z, const MLAccuracy& acc) {
  acc.validate();
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError(describe("ml: alpha outside (0,2]", alpha, beta, z));
  if (!(beta > 0.0)) throw DomainError(describe("ml: beta must be positive", alpha, beta, z));
  if (!std::isfinite(z)) throw DomainError(describe("ml: non-finite argument", alpha, beta, z));
  if (z == 0.0) return {rgamma(beta), 0.0, 1};

  auto acceptable = [&](const SeriesResult& r) {
    return r.converged && std::isfinite(r.value) && r.bound <= acc.tol * std::fabs(r.value);
  };
  SeriesResult r = ml_series<long double>(alpha, beta, z, acc);
  // alternating series with large intermediate terms: retry with 50 digits
  if (!acceptable(r) && r.converged && z < 0.0 && std::isfinite(r.value))
    r = ml_series<boost::multiprecision::cpp_bin_float_50>(alpha, beta, z, acc);
  if (!r.converged)
    throw AccuracyError(describe("ml: series did not converge within max_terms", alpha, beta, z), r.value, r.bound);
  if (!std::isfinite(r.value)) throw AccuracyError(describe("ml: overflow", alpha, beta, z), r.value, r.bound);
  if (!acceptable(r))
    throw AccuracyError(describe("ml: cancellation exceeds tolerance", alpha, beta, z), r.value, r.bound);
  return {r.value, r.bound, r.terms};
}

double ml_two(double alpha, double beta, double z, const MLAccuracy& acc) {
  return ml_two_bounded(alpha, beta, z, acc).value;
}

double ml_one(double alpha, double z, const MLAccuracy& acc) { return ml_two(alpha, 1.0, z, acc); }

double op_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  if (m.size() == 1) return std::fabs(m(0, 0));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

MatrixMittagLeffler::MatrixMittagLeffler(const SquareMatrix& a, const MLAccuracy& acc)
    : a_(a), acc_(acc) {
  acc_.validate();
  if (a.rows() != a.cols() || a.rows() < 1) throw DomainError("matrix ML: A must be square, n >= 1");
  if (!a.allFinite()) throw DomainError("matrix ML: A has non-finite entries");
  const Eigen::Index n = a.rows();

  bool diagonal = true;
  for (Eigen::Index i = 0; i < n && diagonal; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && a(i, j) != 0.0) {
        diagonal = false;
        break;
      }
  if (diagonal) {
    route_ = MatrixRoute::diagonal;
    eigenvalues_ = a.diagonal();
    return;
  }

  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * scale) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
    route_ = MatrixRoute::symmetric;
    eigenvalues_ = es.eigenvalues();
    v_ = es.eigenvectors();
    v_inv_ = v_.transpose();
    return;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() == Eigen::Success) {
    const Eigen::VectorXcd lam = es.eigenvalues();
    bool real = true;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::fabs(lam(i).imag()) > 1e-12 * (1.0 + std::abs(lam(i)))) real = false;
    if (real) {
      Eigen::MatrixXd v = es.eigenvectors().real();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(v);
      const auto& sv = svd.singularValues();
      const double cond = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
      if (cond < 1e8) {
        route_ = MatrixRoute::eigen;
        eigenvalues_ = lam.real();
        v_ = v;
        v_inv_ = v.inverse();
        cond_ = cond;
        return;
      }
      cond_ = cond;
    }
  }
  route_ = MatrixRoute::series;
}

SquareMatrix MatrixMittagLeffler::evaluate(double alpha, double beta, double scale) const {
  return evaluate(alpha, beta, scale, nullptr);
}

SquareMatrix MatrixMittagLeffler::evaluate(double alpha, double beta, double scale,
                                           double* bound) const {
  const Eigen::Index n = a_.rows();
  if (route_ == MatrixRoute::series) return series(alpha, beta, scale, bound);

  Eigen::VectorXd d(n);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const BoundedValue e = ml_two_bounded(alpha, beta, scale * eigenvalues_(i), acc_);
    d(i) = e.value;
    worst = std::max(worst, e.bound);
  }
  if (bound) *bound = worst * cond_;
  if (route_ == MatrixRoute::diagonal) return d.asDiagonal();
  return v_ * d.asDiagonal() * v_inv_;
}

SquareMatrix MatrixMittagLeffler::series(double alpha, double beta, double scale,
                                         double* bound) const {
  if (!(alpha > 0.0 && alpha <= 2.0) || !(beta > 0.0))
    throw DomainError(describe("matrix ml: parameters out of range", alpha, beta, scale));
  const Eigen::Index n = a_.rows();
  const Eigen::MatrixXd sa = scale * a_;
  const double nrm = op_norm(sa);
  if (nrm == 0.0) {
    if (bound) *bound = 0.0;
    return rgamma(beta) * Eigen::MatrixXd::Identity(n, n);
  }
  // Powers are kept normalised, (sA/|sA|)^k, and the scalar factor
  // |sA|^k / Gamma(alpha k + beta) is applied in log space.
  const LongMatrix step = sa.cast<long double>() / static_cast<long double>(nrm);
  const long double lnrm = std::log(static_cast<long double>(nrm));
  auto log_mag = [&](int k) {
    return k * lnrm - log_gamma_l(static_cast<long double>(alpha) * k + beta);
  };

  LongMatrix power = LongMatrix::Identity(n, n);
  LongMatrix sum = LongMatrix::Zero(n, n);
  long double abs_sum = 0.0L;
  long double max_log = 0.0L;
  long double lm = log_mag(0);
  for (int k = 0; k < acc_.max_terms; ++k) {
    const long double mag = std::exp(lm);
    sum += mag * power;
    abs_sum += mag;
    max_log = std::max(max_log, std::fabs(lm));
    const long double lnext = log_mag(k + 1);
    const long double ratio = std::exp(lnext - lm);
    if (ratio < 1.0L) {
      const long double tail = std::exp(lnext) / (1.0L - ratio);
      const long double rounding = abs_sum * kLongEps * (8.0L + k + max_log) * n;
      const Eigen::MatrixXd value = sum.cast<double>();
      const double vn = op_norm(value);
      if (tail <= 1e-2L * acc_.tol * vn || tail <= rounding) {
        const double b = static_cast<double>(tail + rounding) + DBL_EPSILON * vn;
        if (!value.allFinite())
          throw AccuracyError(describe("matrix ml: overflow", alpha, beta, scale), vn, b);
        if (b > acc_.tol * vn)
          throw AccuracyError(describe("matrix ml: cancellation exceeds tolerance", alpha, beta, scale),
                              vn, b);
        if (bound) *bound = b;
        return value;
      }
    }
    power = power * step;
    lm = lnext;
  }
  throw AccuracyError(describe("matrix ml: series did not converge", alpha, beta, scale),
                      op_norm(sum.cast<double>()), std::numeric_limits<double>::infinity());
}

SquareMatrix ml_two_matrix(double alpha, double beta, const SquareMatrix& a, const MLAccuracy& acc) {
  return MatrixMittagLeffler(a, acc).evaluate(alpha, beta, 1.0);
}

namespace {

BoundedValue mainardi_series(double alpha, double theta, const MLAccuracy& acc) {
  // M(theta) = sum (-theta)^k Gamma(alpha(k+1)) sin(pi alpha(k+1)) / (pi k!)
  const long double lt = std::log(static_cast<long double>(theta));
  const long double lpi = std::log(std::numbers::pi_v<long double>);
  auto log_mag = [&](int k) {
    return k * lt + log_gamma_l(static_cast<long double>(alpha) * (k + 1)) -
           log_gamma_l(static_cast<long double>(k) + 1.0L) - lpi;
  };
  const long double a_pow_a = std::pow(static_cast<long double>(alpha), static_cast<long double>(alpha));
  long double sum = 0.0L;
  long double abs_sum = 0.0L;
  long double max_log = 0.0L;
  for (int k = 0; k < acc.max_terms; ++k) {
    const long double lm = log_mag(k);
    const long double mag = std::exp(lm);
    const double s = sinpi(alpha * (k + 1));
    sum += ((k & 1) ? -mag : mag) * s;
    abs_sum += mag;
    max_log = std::max(max_log, std::fabs(lm));
    // Gamma(x + alpha)/Gamma(x) <= x^alpha bounds every later term ratio by rho.
    const long double rho = theta * a_pow_a * std::pow(static_cast<long double>(k + 2), alpha - 1.0L);
    if (rho < 1.0L) {
      const long double tail = std::exp(log_mag(k + 1)) / (1.0L - rho);
      const long double rounding = abs_sum * kLongEps * (8.0L + k + max_log);
      if (tail <= 1e-2L * acc.tol * std::fabs(sum) || tail <= rounding) {
        const double value = static_cast<double>(sum);
        const double bound = static_cast<double>(tail + rounding) + 0.5 * DBL_EPSILON * std::fabs(value);
        if (bound > acc.tol * std::fabs(value))
          throw AccuracyError("mainardi: series bound exceeds tolerance", value, bound);
        return {value, bound, k + 1};
      }
    }
  }
  throw AccuracyError("mainardi: series did not converge", static_cast<double>(sum),
                      std::numeric_limits<double>::infinity());
}

// One-sided stable density in Kanter's form, mapped through
// M_alpha(theta) = t^(alpha+1) f_alpha(t) / alpha with t = theta^(-1/alpha):
//   M = theta^(a/(1-a)) / (pi (1-a)) * int_0^pi A(phi) exp(-theta^(1/(1-a)) A(phi)) dphi
//   A(phi) = [sin(a phi)^a sin((1-a) phi)^(1-a) / sin(phi)]^(1/(1-a))
BoundedValue mainardi_integral(double alpha, double theta, const MLAccuracy& acc) {
  const double b = 1.0 - alpha;
  const double lth = std::log(theta);
  const double c_log = lth / b;
  const double pre_log = alpha / b * lth - std::log(std::numbers::pi * b);
  auto integrand = [&](double phi) {
    const double la =
        (alpha * std::log(std::sin(alpha * phi)) + b * std::log(std::sin(b * phi)) - std::log(std::sin(phi))) / b;
    const double e = c_log + la;
    if (e > 700.0) return 0.0;
    return std::exp(pre_log + la - std::exp(e));
  };
  // the integrand concentrates near phi = 0 in a width ~ theta^(-1/(2(1-a)))
  using Rule = boost::math::quadrature::gauss<double, 30>;
  auto gauss = [&](double lo, double hi) { return Rule::integrate(integrand, lo, hi); };
  double value = 0.0;
  double err_sum = 0.0;
  double scale = 0.0;
  // one rule against its two-panel refinement; the refinement is kept
  auto piece = [&](auto&& self, double lo, double hi, int depth) -> void {
    const double mid = 0.5 * (lo + hi);
    const double coarse = gauss(lo, hi);
    const double fine = gauss(lo, mid) + gauss(mid, hi);
    const double diff = std::fabs(fine - coarse);
    if (diff <= 1e-14 * scale || diff == 0.0 || depth >= 12) {
      value += fine;
      err_sum += diff;
      return;
    }
    self(self, lo, mid, depth + 1);
    self(self, mid, hi, depth + 1);
  };
  const double width = std::exp(-0.5 * c_log);
  std::vector<double> cuts{0.0};
  for (double hi = std::min(width, std::numbers::pi);; hi = std::min(2.0 * hi, std::numbers::pi)) {
    cuts.push_back(hi);
    if (hi >= std::numbers::pi) break;
  }
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) scale += std::fabs(gauss(cuts[i], cuts[i + 1]));
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) piece(piece, cuts[i], cuts[i + 1], 0);
  const double bound = err_sum + 8.0 * DBL_EPSILON * std::fabs(value);
  if (bound > std::max(acc.tol * std::fabs(value), 1e-300))
    throw AccuracyError("mainardi: quadrature bound exceeds tolerance", value, bound);
  return {value, bound, 0};
}

}  // namespace

BoundedValue mainardi_bounded(double alpha, double theta, const MLAccuracy& acc) {
  acc.validate();
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("mainardi: alpha must lie in (0,1)");
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw DomainError("mainardi: theta must be finite and >= 0");
  if (theta == 0.0) return {rgamma(1.0 - alpha), 0.0, 1};
  if (theta <= 1.0) return mainardi_series(alpha, theta, acc);
  return mainardi_integral(alpha, theta, acc);
}

double mainardi(double alpha, double theta, const MLAccuracy& acc) {
  return mainardi_bounded(alpha, theta, acc).value;
}

}  // namespace hfde
