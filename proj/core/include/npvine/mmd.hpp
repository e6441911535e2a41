#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace npvine {

/// Row-major sample of points, one row per observation.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  SampleMatrix(std::size_t rows, std::size_t cols);
  SampleMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  /// Columns of equal length become the matrix columns.
  static SampleMatrix from_columns(const std::vector<std::span<const double>>& columns);
  static SampleMatrix from_column(std::span<const double> column) { return from_columns({column}); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const SampleMatrix&, const SampleMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct MmdConfig {
  std::optional<double> kernel_bandwidth;  // empty selects the median heuristic
  std::size_t permutations = 200;
  double alpha = 0.05;
  std::uint64_t seed = 0;

  /// Throws Error(configuration) unless permutations >= 50, 0 < alpha < 1 and any bandwidth is positive.
  void validate() const;
};

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool rejected = false;
  double bandwidth = 0.0;
};

/// Unbiased MMD^2 with kernel exp(-|a-b|^2 / (2 bandwidth^2)). Exactly symmetric in X and Y.
/// Throws Error(insufficient_data) below 2 rows and Error(schema_mismatch) on differing widths.
double mmd_statistic(const SampleMatrix& x, const SampleMatrix& y, double bandwidth);

/// Median pairwise Euclidean distance of the pooled sample, using an evenly
/// strided subsample of at most 1000 points. Returns 1 when all points coincide.
double median_heuristic(const SampleMatrix& x, const SampleMatrix& y);

/// Permutation test on pooled relabelings; p = (1 + #{permuted >= observed}) / (1 + B).
/// Deterministic given config.seed.
TestResult permutation_test(const SampleMatrix& x, const SampleMatrix& y, const MmdConfig& config);

}  // namespace npvine
