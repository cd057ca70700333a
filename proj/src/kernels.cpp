#include "hfde/kernels.hpp"

#ifdef HFDE_HAVE_OPENMP
#include <omp.h>
#endif

namespace hfde {

namespace {

// out_i = sum_{j<i} lower[i-j-1] r_j + upper[i-j-1] r_{j+1}
inline void convolve_node(const ConvolutionWeights& w, const Eigen::MatrixXd& r, int i, double* out) {
  const int n = w.dim;
  for (int c = 0; c < n; ++c) out[c] = 0.0;
  for (int j = 0; j < i; ++j) {
    const int m = i - j - 1;
    const double* lo = w.lower_block(m);
    const double* up = w.upper_block(m);
    for (int q = 0; q < n; ++q) {
      const double rj = r(j, q);
      const double rj1 = r(j + 1, q);
      const double* lo_col = lo + q * n;
      const double* up_col = up + q * n;
      for (int p = 0; p < n; ++p) out[p] += lo_col[p] * rj + up_col[p] * rj1;
    }
  }
}

}  // namespace

Eigen::MatrixXd convolve_serial(const ConvolutionWeights& w, const Eigen::MatrixXd& r) {
  const int steps = w.steps;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(steps + 1, w.dim);
  std::vector<double> buf(w.dim);
  for (int i = 1; i <= steps; ++i) {
    convolve_node(w, r, i, buf.data());
    for (int p = 0; p < w.dim; ++p) out(i, p) = buf[p];
  }
  return out;
}

Eigen::MatrixXd convolve_parallel(const ConvolutionWeights& w, const Eigen::MatrixXd& r) {
  const int steps = w.steps;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(steps + 1, w.dim);
#pragma omp parallel
  {
    std::vector<double> buf(w.dim);
    // node i costs O(i): dynamic schedule balances the triangle
#pragma omp for schedule(dynamic, 16)
    for (int i = 1; i <= steps; ++i) {
      convolve_node(w, r, i, buf.data());
      for (int p = 0; p < w.dim; ++p) out(i, p) = buf[p];
    }
  }
  return out;
}

Eigen::MatrixXd convolve(const ConvolutionWeights& w, const Eigen::MatrixXd& r, Execution exec) {
  return exec == Execution::parallel ? convolve_parallel(w, r) : convolve_serial(w, r);
}

int max_threads() {
#ifdef HFDE_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace hfde
