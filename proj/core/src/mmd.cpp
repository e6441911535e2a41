#include "npvine/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "npvine/error.hpp"
#include "npvine/parallel.hpp"
#include "npvine/rng.hpp"

namespace npvine {

namespace {

constexpr std::size_t kMedianSubsample = 1000;
constexpr std::size_t kMaxCachedKernel = 4096;

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

void check_pair(const SampleMatrix& x, const SampleMatrix& y) {
  if (x.cols() != y.cols()) fail(ErrorKind::schema_mismatch, "MMD samples differ in column count");
  if (x.rows() < 2 || y.rows() < 2) fail(ErrorKind::insufficient_data, "MMD needs at least 2 rows per sample");
}

double within_mean(const SampleMatrix& s, double scale) {
  double sum = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = i + 1; j < s.rows(); ++j) sum += std::exp(-squared_distance(s.row(i), s.row(j)) * scale);
  }
  const double n = static_cast<double>(s.rows());
  return 2.0 * sum / (n * (n - 1.0));
}

double cross_mean(const SampleMatrix& a, const SampleMatrix& b, double scale) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) sum += std::exp(-squared_distance(a.row(i), b.row(j)) * scale);
  }
  return sum / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

// Orders the pair so the cross sum is accumulated identically for (x, y) and (y, x).
bool canonical_first(const SampleMatrix& x, const SampleMatrix& y) {
  if (x.rows() != y.rows()) return x.rows() < y.rows();
  return !std::lexicographical_compare(y.values().begin(), y.values().end(), x.values().begin(), x.values().end());
}

// Kernel values of the pooled sample, cached when small enough.
class PooledKernel {
 public:
  PooledKernel(const SampleMatrix& x, const SampleMatrix& y, double scale)
      : x_(x), y_(y), n_(x.rows() + y.rows()), scale_(scale) {
    if (n_ <= kMaxCachedKernel) {
      cache_.resize(n_ * n_);
      parallel_for(n_, [&](std::size_t i) {
        for (std::size_t j = 0; j < n_; ++j) cache_[i * n_ + j] = i == j ? 0.0 : compute(i, j);
      });
    }
    row_sums_.resize(n_);
    parallel_for(n_, [&](std::size_t i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        if (j != i) s += (*this)(i, j);
      }
      row_sums_[i] = s;
    });
    for (double r : row_sums_) total_ += r;
  }

  double operator()(std::size_t i, std::size_t j) const {
    return cache_.empty() ? compute(i, j) : cache_[i * n_ + j];
  }

  std::size_t size() const noexcept { return n_; }

  // Statistic when `first` (size m) is one sample and the rest the other.
  double statistic(std::span<const std::size_t> first) const {
    const double m = static_cast<double>(first.size());
    const double r = static_cast<double>(n_ - first.size());
    double within_first = 0.0;
    double first_rows = 0.0;
    for (std::size_t a = 0; a < first.size(); ++a) {
      first_rows += row_sums_[first[a]];
      if (cache_.empty()) {
        for (std::size_t b = a + 1; b < first.size(); ++b) within_first += compute(first[a], first[b]);
        continue;
      }
      const double* row = cache_.data() + first[a] * n_;
      double s0 = 0.0, s1 = 0.0;
      std::size_t b = a + 1;
      for (; b + 2 <= first.size(); b += 2) {
        s0 += row[first[b]];
        s1 += row[first[b + 1]];
      }
      if (b < first.size()) s0 += row[first[b]];
      within_first += s0 + s1;
    }
    within_first *= 2.0;
    const double cross = first_rows - within_first;
    const double within_rest = total_ - within_first - 2.0 * cross;
    return within_first / (m * (m - 1.0)) + within_rest / (r * (r - 1.0)) - 2.0 * cross / (m * r);
  }

 private:
  std::span<const double> point(std::size_t i) const {
    return i < x_.rows() ? x_.row(i) : y_.row(i - x_.rows());
  }
  double compute(std::size_t i, std::size_t j) const { return std::exp(-squared_distance(point(i), point(j)) * scale_); }

  const SampleMatrix& x_;
  const SampleMatrix& y_;
  std::size_t n_;
  double scale_;
  std::vector<double> cache_;
  std::vector<double> row_sums_;
  double total_ = 0.0;
};

}  // namespace

SampleMatrix::SampleMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols) {}

SampleMatrix::SampleMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) fail(ErrorKind::domain, "SampleMatrix: value count does not match shape");
}

SampleMatrix SampleMatrix::from_columns(const std::vector<std::span<const double>>& columns) {
  if (columns.empty()) return {};
  const std::size_t n = columns.front().size();
  SampleMatrix m(n, columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != n) fail(ErrorKind::domain, "SampleMatrix: columns differ in length");
    for (std::size_t i = 0; i < n; ++i) m(i, j) = columns[j][i];
  }
  return m;
}

void MmdConfig::validate() const {
  if (permutations < 50) fail(ErrorKind::configuration, "MMD permutations must be at least 50");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::configuration, "MMD alpha must lie in (0, 1)");
  if (kernel_bandwidth && !(*kernel_bandwidth > 0.0 && std::isfinite(*kernel_bandwidth))) {
    fail(ErrorKind::configuration, "MMD kernel bandwidth must be positive");
  }
}

double mmd_statistic(const SampleMatrix& x, const SampleMatrix& y, double bandwidth) {
  check_pair(x, y);
  if (!(bandwidth > 0.0)) fail(ErrorKind::domain, "MMD bandwidth must be positive");
  const double scale = 1.0 / (2.0 * bandwidth * bandwidth);
  const double cross = canonical_first(x, y) ? cross_mean(x, y, scale) : cross_mean(y, x, scale);
  return within_mean(x, scale) + within_mean(y, scale) - 2.0 * cross;
}

double median_heuristic(const SampleMatrix& x, const SampleMatrix& y) {
  if (x.cols() != y.cols()) fail(ErrorKind::schema_mismatch, "MMD samples differ in column count");
  const std::size_t n = x.rows() + y.rows();
  if (n < 2) fail(ErrorKind::insufficient_data, "median heuristic needs at least 2 points");
  const std::size_t m = std::min(n, kMedianSubsample);
  std::vector<std::span<const double>> points;
  points.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = k * n / m;
    points.push_back(i < x.rows() ? x.row(i) : y.row(i - x.rows()));
  }
  std::vector<double> distances;
  distances.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) distances.push_back(std::sqrt(squared_distance(points[i], points[j])));
  }
  const std::size_t mid = distances.size() / 2;
  std::nth_element(distances.begin(), distances.begin() + mid, distances.end());
  double median = distances[mid];
  if (distances.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(distances.begin(), distances.begin() + mid));
  }
  return median > 0.0 ? median : 1.0;
}

TestResult permutation_test(const SampleMatrix& x, const SampleMatrix& y, const MmdConfig& config) {
  config.validate();
  check_pair(x, y);
  TestResult result;
  result.bandwidth = config.kernel_bandwidth.value_or(median_heuristic(x, y));
  result.statistic = mmd_statistic(x, y, result.bandwidth);

  const PooledKernel kernel(x, y, 1.0 / (2.0 * result.bandwidth * result.bandwidth));
  const std::size_t n = kernel.size();
  // Relabel the smaller group; the statistic depends only on the split.
  const bool x_small = x.rows() <= y.rows();
  const std::size_t m = x_small ? x.rows() : y.rows();
  std::vector<std::size_t> observed(m);
  for (std::size_t i = 0; i < m; ++i) observed[i] = x_small ? i : x.rows() + i;
  const double reference = kernel.statistic(observed);

  const std::size_t b = config.permutations;
  std::vector<std::size_t> draws(b * m);
  Rng rng(config.seed);
  std::vector<std::size_t> pool(n);
  for (std::size_t p = 0; p < b; ++p) {
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < m; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(pool[i], pool[j]);
      draws[p * m + i] = pool[i];
    }
  }
  std::vector<double> permuted(b);
  parallel_for(b, [&](std::size_t p) {
    // Sorted indices turn the kernel lookups into near-sequential reads.
    const auto group = std::span(draws).subspan(p * m, m);
    std::sort(group.begin(), group.end());
    permuted[p] = kernel.statistic(group);
  });

  const auto exceed = std::count_if(permuted.begin(), permuted.end(), [&](double s) { return s >= reference; });
  result.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + b);
  result.rejected = result.p_value < config.alpha;
  return result;
}

}  // namespace npvine
