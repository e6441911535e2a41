#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "npvine/dataset.hpp"
#include "npvine/vine.hpp"

namespace npvine {

inline constexpr std::size_t kDefaultGridPoints = 257;
inline constexpr std::size_t kMinGridPoints = 33;

/// Strictly increasing evaluation points for the response.
struct YGrid {
  std::vector<double> points;

  /// Spans the [0.001, 0.999] quantiles of `marginal`, widened by 10% of that width on each side.
  static YGrid for_marginal(const GaussianKernel1D& marginal, std::size_t points = kDefaultGridPoints);
};

/// Grid over the target marginal of `vine`; throws Error(configuration) if no target is set.
YGrid response_grid(const VineModel& vine, std::size_t points = kDefaultGridPoints);

/// Trapezoidal integral of values over the grid points.
double trapezoid(std::span<const double> points, std::span<const double> values);

enum class PointPredictor { mean, median };

/// Evaluates p(y | x) on a fixed grid for one vine. Building it precomputes the
/// grid-side kernel factors, so reuse one instance across many rows.
class ConditionalDensity {
 public:
  ConditionalDensity(const VineModel& vine, YGrid grid);
  ~ConditionalDensity();
  ConditionalDensity(ConditionalDensity&&) noexcept;
  ConditionalDensity& operator=(ConditionalDensity&&) noexcept;

  const YGrid& grid() const noexcept;

  /// Normalized density on the grid. `x` holds either all d variables (the
  /// response entry is ignored) or the d - 1 features in variable order.
  std::vector<double> density(std::span<const double> x) const;

  /// Same values through the full per-point vine evaluation, without precomputed factors.
  std::vector<double> density_reference(std::span<const double> x, bool all_factors = false) const;

  double predict(std::span<const double> x, PointPredictor predictor = PointPredictor::mean) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// p(y | x) on the grid from the factors involving y, normalized by trapezoid quadrature.
std::vector<double> conditional_density(const VineModel& vine, std::span<const double> x, const YGrid& grid);

/// Integral of y p(y | x) over the grid.
double predict_mean(const VineModel& vine, std::span<const double> x, const YGrid& grid);

/// Point predictions for every row of `data`, which must hold the feature
/// columns (the response column may be present and is ignored).
std::vector<double> predict(const VineModel& vine, const Dataset& data, const YGrid& grid,
                            PointPredictor predictor = PointPredictor::mean);

/// mean((prediction - truth)^2) / population variance of truth.
/// Throws Error(degenerate_metric) for constant truth, Error(domain) for bad lengths.
double nmse(std::span<const double> predictions, std::span<const double> truth);

/// Mean log_density over the rows of `test`; Error(schema_mismatch) when a vine variable is missing.
double test_log_likelihood(const VineModel& vine, const Dataset& test);

struct RegressionMetrics {
  double nmse = 0.0;
  double tll = 0.0;
};

RegressionMetrics evaluate(const VineModel& vine, const Dataset& test, const YGrid& grid);

}  // namespace npvine
