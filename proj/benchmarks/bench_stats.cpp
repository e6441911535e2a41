#include <benchmark/benchmark.h>

#include <vector>

#include "npvine/bicopula.hpp"
#include "npvine/kde.hpp"
#include "npvine/kendall.hpp"
#include "npvine/mmd.hpp"
#include "npvine/rng.hpp"

namespace {

std::vector<double> draws(std::size_t n, std::uint64_t seed) {
  npvine::Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.normal();
  return out;
}

void BM_KendallTau(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = draws(n, 1);
  const auto y = draws(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(npvine::kendall_tau(x, y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KendallTau)->RangeMultiplier(4)->Range(256, 65536)->Complexity(benchmark::oNLogN);

void BM_KernelCdfBatch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto centers = draws(n, 3);
  const auto kde = npvine::GaussianKernel1D::fit(centers);
  const auto points = draws(n, 4);
  for (auto _ : state) benchmark::DoNotOptimize(npvine::kde1d_cdf(kde, std::span<const double>(points)));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KernelCdfBatch)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_HFunction(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> u(n), v(n);
  npvine::Rng rng(5);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = rng.uniform();
    v[i] = rng.uniform();
  }
  const auto copula = npvine::fit_kernel_copula(u, v);
  for (auto _ : state) benchmark::DoNotOptimize(npvine::h_function(copula, 0.3, 0.7));
}
BENCHMARK(BM_HFunction)->Arg(300)->Arg(1000);

void BM_MmdPermutationTest(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = npvine::SampleMatrix::from_column(draws(n, 6));
  const auto y = npvine::SampleMatrix::from_column(draws(n, 7));
  npvine::MmdConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(npvine::permutation_test(x, y, config));
}
BENCHMARK(BM_MmdPermutationTest)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace
