#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace npvine {

/// Sample standard deviation (n - 1 denominator).
double sample_sd(std::span<const double> sample);

/// Multivariate Silverman rule applied to one coordinate:
/// sd * (4 / (dim + 2))^(1 / (dim + 4)) * n^(-1 / (dim + 4)).
/// Throws Error(degenerate_sample) for a zero-variance sample and
/// Error(insufficient_data) for fewer than two points.
double silverman_bandwidth(std::span<const double> sample, int dim);

/// One-dimensional Gaussian kernel density: support points and a bandwidth.
class GaussianKernel1D {
 public:
  GaussianKernel1D(std::vector<double> centers, double bandwidth);

  /// Kernel estimate of a sample with the dim = 1 Silverman bandwidth.
  static GaussianKernel1D fit(std::span<const double> sample);

  const std::vector<double>& centers() const noexcept { return centers_; }
  double bandwidth() const noexcept { return bandwidth_; }
  std::size_t size() const noexcept { return centers_.size(); }

 private:
  std::vector<double> centers_;
  double bandwidth_;
};

double kde1d_pdf(const GaussianKernel1D& model, double x);
double kde1d_log_pdf(const GaussianKernel1D& model, double x);
double kde1d_cdf(const GaussianKernel1D& model, double x);

/// cdf at many points. Uses a truncated Hermite expansion of the kernel sum
/// over cells of one bandwidth, so the cost is O((n + m) log n) instead of
/// O(n m); agrees with the direct sum to about 1e-15.
std::vector<double> kde1d_cdf(const GaussianKernel1D& model, std::span<const double> xs);

/// Inverse cdf by safeguarded Newton iteration inside a bisection bracket.
/// Throws Error(domain) unless 0 < p < 1.
double kde1d_quantile(const GaussianKernel1D& model, double p);

/// Mixture mean, i.e. the mean of the centers.
double kde1d_mean(const GaussianKernel1D& model);

/// Precomputed cell moments behind the batched kde1d_cdf.
class KernelCdfSeries {
 public:
  explicit KernelCdfSeries(const GaussianKernel1D& model);

  /// Unnormalized sum of Phi((x - c_i) / h) over all centers.
  double sum(double x) const;
  double cdf(double x) const { return sum(x) / static_cast<double>(count_); }

  static constexpr int kOrder = 24;

 private:
  struct Cell {
    long index;
    std::size_t count;
    double moments[kOrder];
  };

  double origin_;
  double bandwidth_;
  std::size_t count_;
  std::vector<Cell> cells_;
  std::vector<std::size_t> count_before_;  // centers in cells_[0..k)
};

/// Fits a marginal kernel estimate to the column and returns its cdf at every
/// data point. All values are strictly inside (0, 1).
std::vector<double> pseudo_observations(std::span<const double> data);

/// Rank-based alternative: rank / (n + 1), ties sharing their mean rank.
std::vector<double> rank_pseudo_observations(std::span<const double> data);

/// Product-kernel multivariate Gaussian KDE with per-coordinate Silverman
/// bandwidths at dim = d. Rows are observations.
class MultivariateKde {
 public:
  explicit MultivariateKde(std::vector<std::vector<double>> rows);

  double log_pdf(std::span<const double> x) const;
  const std::vector<double>& bandwidths() const noexcept { return bandwidths_; }

 private:
  std::vector<std::vector<double>> rows_;
  std::vector<double> bandwidths_;
};

}  // namespace npvine
