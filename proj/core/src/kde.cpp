#include "npvine/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "npvine/error.hpp"
#include "npvine/normal.hpp"

namespace npvine {

namespace {

// Phi(-kTail) is below 1e-19, so cells further than this many bandwidths from
// the query contribute exactly 0 or their full count in double precision.
constexpr long kNearCells = 12;

double log_sum_exp(std::span<const double> values) {
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double total = 0.0;
  for (const double v : values) total += std::exp(v - top);
  return top + std::log(total);
}

}  // namespace

double sample_sd(std::span<const double> sample) {
  const auto n = sample.size();
  if (n < 2) fail(ErrorKind::insufficient_data, "standard deviation needs at least 2 points");
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (const double v : sample) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double silverman_bandwidth(std::span<const double> sample, int dim) {
  if (dim < 1) fail(ErrorKind::domain, "silverman_bandwidth: dim must be positive");
  const double sd = sample_sd(sample);
  if (!(sd > 0.0) || !std::isfinite(sd)) {
    fail(ErrorKind::degenerate_sample, "silverman_bandwidth: sample has zero variance");
  }
  const double d = dim;
  const double n = static_cast<double>(sample.size());
  return sd * std::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0)) * std::pow(n, -1.0 / (d + 4.0));
}

GaussianKernel1D::GaussianKernel1D(std::vector<double> centers, double bandwidth)
    : centers_(std::move(centers)), bandwidth_(bandwidth) {
  if (centers_.empty()) fail(ErrorKind::insufficient_data, "kernel density needs at least one center");
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
    fail(ErrorKind::domain, "kernel bandwidth must be positive and finite");
  }
  for (const double c : centers_) {
    if (!std::isfinite(c)) fail(ErrorKind::domain, "kernel centers must be finite");
  }
}

GaussianKernel1D GaussianKernel1D::fit(std::span<const double> sample) {
  const double h = silverman_bandwidth(sample, 1);
  return GaussianKernel1D(std::vector<double>(sample.begin(), sample.end()), h);
}

double kde1d_pdf(const GaussianKernel1D& model, double x) {
  const double h = model.bandwidth();
  double total = 0.0;
  for (const double c : model.centers()) total += std_normal_pdf((x - c) / h);
  return total / (static_cast<double>(model.size()) * h);
}

double kde1d_log_pdf(const GaussianKernel1D& model, double x) {
  const double h = model.bandwidth();
  std::vector<double> terms;
  terms.reserve(model.size());
  for (const double c : model.centers()) {
    const double t = (x - c) / h;
    terms.push_back(-0.5 * t * t);
  }
  return log_sum_exp(terms) - kLogSqrt2Pi - std::log(static_cast<double>(model.size()) * h);
}

double kde1d_cdf(const GaussianKernel1D& model, double x) {
  const double h = model.bandwidth();
  double total = 0.0;
  for (const double c : model.centers()) total += std_normal_cdf((x - c) / h);
  return total / static_cast<double>(model.size());
}

std::vector<double> kde1d_cdf(const GaussianKernel1D& model, std::span<const double> xs) {
  const KernelCdfSeries series(model);
  std::vector<double> out(xs.size());
  std::transform(xs.begin(), xs.end(), out.begin(), [&](double x) { return series.cdf(x); });
  return out;
}

double kde1d_quantile(const GaussianKernel1D& model, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    fail(ErrorKind::domain, "kde1d_quantile: p must lie in (0,1), got " + std::to_string(p));
  }
  const auto [min_it, max_it] = std::minmax_element(model.centers().begin(), model.centers().end());
  const double h = model.bandwidth();
  double lo = *min_it - 10.0 * h;
  double hi = *max_it + 10.0 * h;
  for (double step = 10.0 * h; kde1d_cdf(model, lo) > p; step *= 2.0) lo -= step;
  for (double step = 10.0 * h; kde1d_cdf(model, hi) < p; step *= 2.0) hi += step;

  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = kde1d_cdf(model, x) - p;
    if (std::abs(f) <= 1e-14) break;
    if (f < 0.0) lo = x; else hi = x;
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(x))) break;
    const double slope = kde1d_pdf(model, x);
    double next = slope > 0.0 ? x - f / slope : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

double kde1d_mean(const GaussianKernel1D& model) {
  const auto& c = model.centers();
  return std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
}

KernelCdfSeries::KernelCdfSeries(const GaussianKernel1D& model)
    : bandwidth_(model.bandwidth()), count_(model.size()) {
  std::vector<double> sorted = model.centers();
  std::sort(sorted.begin(), sorted.end());
  origin_ = sorted.front();

  double inv_factorial[kOrder];
  inv_factorial[0] = 1.0;
  for (int k = 1; k < kOrder; ++k) inv_factorial[k] = inv_factorial[k - 1] / k;

  for (const double c : sorted) {
    const auto index = static_cast<long>(std::floor((c - origin_) / bandwidth_));
    if (cells_.empty() || cells_.back().index != index) {
      Cell cell{index, 0, {}};
      cells_.push_back(cell);
    }
    Cell& cell = cells_.back();
    const double cell_center = origin_ + (static_cast<double>(index) + 0.5) * bandwidth_;
    const double s = -(c - cell_center) / bandwidth_;
    double power = 1.0;
    for (int k = 0; k < kOrder; ++k) {
      cell.moments[k] += power * inv_factorial[k];
      power *= s;
    }
    ++cell.count;
  }

  count_before_.resize(cells_.size() + 1, 0);
  for (std::size_t k = 0; k < cells_.size(); ++k) count_before_[k + 1] = count_before_[k] + cells_[k].count;
}

double KernelCdfSeries::sum(double x) const {
  if (std::isnan(x)) return x;
  const double t = (x - origin_) / bandwidth_;
  const double span_cells = static_cast<double>(cells_.back().index) + 2.0 * kNearCells;
  if (t < -2.0 * kNearCells) return 0.0;
  if (t > span_cells) return static_cast<double>(count_);

  const auto query_cell = static_cast<long>(std::floor(t));
  const auto first = std::lower_bound(cells_.begin(), cells_.end(), query_cell - kNearCells,
                                      [](const Cell& cell, long index) { return cell.index < index; });
  double total = static_cast<double>(count_before_[static_cast<std::size_t>(first - cells_.begin())]);

  for (auto it = first; it != cells_.end() && it->index <= query_cell + kNearCells; ++it) {
    // Phi(t0 - s) = sum_k (-s)^k / k! * Phi^(k)(t0), Phi^(k) = (-1)^(k-1) He_{k-1} phi.
    const double t0 = t - static_cast<double>(it->index) - 0.5;
    double series = 0.0;
    double he_prev = 0.0;
    double he = 1.0;
    double sign = 1.0;
    for (int k = 1; k < kOrder; ++k) {
      series += sign * it->moments[k] * he;
      const double he_next = t0 * he - static_cast<double>(k - 1) * he_prev;
      he_prev = he;
      he = he_next;
      sign = -sign;
    }
    total += it->moments[0] * std_normal_cdf(t0) + std_normal_pdf(t0) * series;
  }
  return total;
}

std::vector<double> pseudo_observations(std::span<const double> data) {
  return kde1d_cdf(GaussianKernel1D::fit(data), data);
}

std::vector<double> rank_pseudo_observations(std::span<const double> data) {
  const auto n = data.size();
  if (n < 2) fail(ErrorKind::insufficient_data, "pseudo-observations need at least 2 points");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data[a] < data[b]; });
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && data[order[j + 1]] == data[order[i]]) ++j;
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = mean_rank / static_cast<double>(n + 1);
    i = j + 1;
  }
  return out;
}

MultivariateKde::MultivariateKde(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
  if (rows_.size() < 2) fail(ErrorKind::insufficient_data, "multivariate KDE needs at least 2 rows");
  const auto d = rows_.front().size();
  std::vector<double> column(rows_.size());
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < rows_.size(); ++i) column[i] = rows_[i][j];
    bandwidths_.push_back(silverman_bandwidth(column, static_cast<int>(d)));
  }
}

double MultivariateKde::log_pdf(std::span<const double> x) const {
  std::vector<double> terms(rows_.size());
  double log_norm = std::log(static_cast<double>(rows_.size()));
  for (std::size_t j = 0; j < bandwidths_.size(); ++j) log_norm += std::log(bandwidths_[j]) + kLogSqrt2Pi;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    double q = 0.0;
    for (std::size_t j = 0; j < bandwidths_.size(); ++j) {
      const double t = (x[j] - rows_[i][j]) / bandwidths_[j];
      q += t * t;
    }
    terms[i] = -0.5 * q;
  }
  return log_sum_exp(terms) - log_norm;
}

}  // namespace npvine
