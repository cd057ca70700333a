#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP version; both visit the same terms in the same order per output
// node, so they agree bit for bit.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace hfde {

enum class Execution { serial, parallel };

/// Weights of the product-integration rule for a matrix kernel K on a
/// uniform grid of step h:  (K * r)(ih) = sum_j lower[i-j-1] r_j + upper[i-j-1] r_{j+1},
/// exact for r piecewise linear. Blocks are n x n, column-major, packed
/// contiguously by distance m = 0..N-1.
struct ConvolutionWeights {
  int steps = 0;  // N
  int dim = 0;    // n
  std::vector<double> lower;
  std::vector<double> upper;

  const double* lower_block(int m) const { return lower.data() + static_cast<std::size_t>(m) * dim * dim; }
  const double* upper_block(int m) const { return upper.data() + static_cast<std::size_t>(m) * dim * dim; }
};

/// r has N+1 rows (nodes 0..N), n columns. Returns N+1 rows with row 0 zero.
Eigen::MatrixXd convolve_serial(const ConvolutionWeights& w, const Eigen::MatrixXd& r);
Eigen::MatrixXd convolve_parallel(const ConvolutionWeights& w, const Eigen::MatrixXd& r);
Eigen::MatrixXd convolve(const ConvolutionWeights& w, const Eigen::MatrixXd& r, Execution exec);

/// Number of OpenMP threads available (1 without OpenMP).
int max_threads();

}  // namespace hfde
