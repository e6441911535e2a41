#include <benchmark/benchmark.h>

#include "npvine/generators.hpp"
#include "npvine/regress.hpp"
#include "npvine/vine.hpp"

namespace {

// Args: rows, columns, truncation.
void BM_FitVine(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto data = npvine::gaussian_copula_chain(n, d, 0.6, {}, 1);
  npvine::VineFitOptions options;
  options.truncation = static_cast<std::size_t>(state.range(2));
  for (auto _ : state) benchmark::DoNotOptimize(npvine::fit_vine(data, options));
}
BENCHMARK(BM_FitVine)
    ->Args({1000, 8, 1})
    ->Args({1000, 16, 1})
    ->Args({4000, 8, 1})
    ->Args({1000, 8, 7})
    ->Unit(benchmark::kMillisecond);

void BM_VineLogDensity(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto data = npvine::gaussian_copula_chain(1000, d, 0.6, {}, 2);
  npvine::VineFitOptions options;
  options.truncation = d - 1;
  const auto vine = npvine::fit_vine(data, options);
  const auto x = data.row(0);
  for (auto _ : state) benchmark::DoNotOptimize(npvine::log_density(vine, x));
}
BENCHMARK(BM_VineLogDensity)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_PredictRow(benchmark::State& state) {
  const auto data = npvine::regression_task(1000, 10, false, 3);
  npvine::VineFitOptions options;
  options.target_index = 9;
  const auto vine = npvine::fit_vine(data, options);
  const npvine::ConditionalDensity model(vine, npvine::response_grid(vine));
  const auto x = data.row(0);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(x));
}
BENCHMARK(BM_PredictRow)->Unit(benchmark::kMicrosecond);

}  // namespace
