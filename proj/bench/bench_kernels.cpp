#include <benchmark/benchmark.h>

#include <cmath>

#include "hfde/frac_calc.hpp"
#include "hfde/kernels.hpp"
#include "hfde/resolvent.hpp"

using namespace hfde;

namespace {

ConvolutionWeights weights_for(int steps) {
  Generator g;
  g.a.resize(2, 2);
  g.a << 1.0, 0.4, -0.2, 0.6;
  const ResolventFamily fam(g, OrderParams{0.7, 0.5});
  return fam.kernel_weights(1.0 / steps, steps);
}

void convolve_bench(benchmark::State& state, Execution exec) {
  const int steps = static_cast<int>(state.range(0));
  const ConvolutionWeights w = weights_for(steps);
  const Eigen::MatrixXd r = Eigen::MatrixXd::Random(steps + 1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(convolve(w, r, exec));
  state.SetComplexityN(steps);
}

void rl_bench(benchmark::State& state, Execution exec) {
  const int steps = static_cast<int>(state.range(0));
  GridFunction f;
  f.gamma = 0.7;
  f.nodes = uniform_nodes(0.0, 1.0, steps, f.gamma);
  f.values.resize(f.size(), 4);
  for (int i = 0; i < f.size(); ++i)
    for (int j = 0; j < 4; ++j) f.values(i, j) = std::pow(f.nodes[i], -0.3) * std::cos((j + 1) * f.nodes[i]);
  for (auto _ : state) benchmark::DoNotOptimize(rl_integral_psi_nodes(0.6, PsiFunction::identity(), f, exec));
  state.SetComplexityN(steps);
}

}  // namespace

BENCHMARK_CAPTURE(convolve_bench, serial, Execution::serial)->RangeMultiplier(2)->Range(256, 2048)->Complexity();
BENCHMARK_CAPTURE(convolve_bench, parallel, Execution::parallel)->RangeMultiplier(2)->Range(256, 2048)->Complexity();
BENCHMARK_CAPTURE(rl_bench, serial, Execution::serial)->RangeMultiplier(2)->Range(256, 2048)->Complexity();
BENCHMARK_CAPTURE(rl_bench, parallel, Execution::parallel)->RangeMultiplier(2)->Range(256, 2048)->Complexity();

BENCHMARK_MAIN();
