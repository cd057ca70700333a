#pragma once

// Mittag-Leffler functions (scalar and matrix) and the Mainardi-Wright
// density M_alpha.

#include <Eigen/Dense>

namespace hfde {

struct MLAccuracy {
  double tol = 1e-12;   // relative tolerance, in (0, 1e-3]
  int max_terms = 4000; // >= 16

  void validate() const;
};

/// Value together with an a-posteriori error bound.
struct BoundedValue {
  double value = 0.0;
  double bound = 0.0;
  int terms = 0;
};

using SquareMatrix = Eigen::MatrixXd;

/// Reciprocal gamma 1/Gamma(x), zero at the poles x = 0, -1, -2, ...
double rgamma(double x);

/// sin(pi x) with exact zeros at the integers.
double sinpi(double x);

/// E_{alpha,beta}(z) = sum z^k / Gamma(alpha k + beta) with its error bound.
/// Throws AccuracyError when the bound exceeds tol * |value|.
BoundedValue ml_two_bounded(double alpha, double beta, double z, const MLAccuracy& acc = {});

double ml_two(double alpha, double beta, double z, const MLAccuracy& acc = {});

/// One-parameter E_alpha(z) = E_{alpha,1}(z).
double ml_one(double alpha, double z, const MLAccuracy& acc = {});

/// How a matrix function is evaluated for a particular matrix.
enum class MatrixRoute { diagonal, symmetric, eigen, series };

/// Evaluates E_{alpha,beta}(s A) for a fixed A and many (alpha, beta, s).
///
/// The route is chosen once: exactly diagonal A uses the diagonal, symmetric
/// A an orthogonal eigenbasis, other A with real spectrum and eigenvector
/// condition below 1e8 the eigenbasis V diag(.) V^-1, and everything else a
/// truncated power series with a norm-based remainder bound.
class MatrixMittagLeffler {
 public:
  explicit MatrixMittagLeffler(const SquareMatrix& a, const MLAccuracy& acc = {});

  SquareMatrix evaluate(double alpha, double beta, double scale = 1.0) const;
  SquareMatrix evaluate(double alpha, double beta, double scale, double* bound) const;

  MatrixRoute route() const { return route_; }
  double eigenvector_condition() const { return cond_; }
  int dim() const { return static_cast<int>(a_.rows()); }
  const SquareMatrix& matrix() const { return a_; }

 private:
  SquareMatrix series(double alpha, double beta, double scale, double* bound) const;

  SquareMatrix a_;
  MLAccuracy acc_;
  MatrixRoute route_ = MatrixRoute::series;
  Eigen::VectorXd eigenvalues_;
  SquareMatrix v_;
  SquareMatrix v_inv_;
  double cond_ = 1.0;
};

/// E_{alpha,beta}(A).
SquareMatrix ml_two_matrix(double alpha, double beta, const SquareMatrix& a,
                           const MLAccuracy& acc = {});

/// Mainardi-Wright density M_alpha(theta), alpha in (0,1), theta >= 0.
BoundedValue mainardi_bounded(double alpha, double theta, const MLAccuracy& acc = {});

double mainardi(double alpha, double theta, const MLAccuracy& acc = {});

/// Largest singular value.
double op_norm(const Eigen::MatrixXd& m);

}  // namespace hfde
