#include "npvine/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <variant>

#include "npvine/error.hpp"
#include "npvine/normal.hpp"
#include "npvine/parallel.hpp"

namespace npvine {

namespace {

std::size_t require_target(const VineModel& vine) {
  if (!vine.target_index) fail(ErrorKind::configuration, "the vine has no target variable");
  return *vine.target_index;
}

// Four independent accumulators so the loop is not bound by addition latency.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double clamp_unit(double u) { return std::clamp(u, kBoundaryEps, 1.0 - kBoundaryEps); }

// exp(log_values - max) normalized to unit trapezoid mass.
std::vector<double> normalize(std::span<const double> points, std::vector<double> log_values) {
  const double top = *std::max_element(log_values.begin(), log_values.end());
  if (!std::isfinite(top)) fail(ErrorKind::domain, "conditional density vanishes on the whole grid");
  for (double& v : log_values) v = std::exp(v - top);
  const double mass = trapezoid(points, log_values);
  for (double& v : log_values) v /= mass;
  return log_values;
}

// First-tree kernel copula with gamma = 0 touching the response: the response
// side kernel values at each grid point are fixed, so only the feature side
// varies between rows.
struct SeparableEdge {
  std::size_t feature = 0;
  bool response_first = true;
  const KernelCopula* copula = nullptr;
  std::vector<double> grid_kernel;  // grid-major, [g * n + i] = exp(-a^2 / 2)
  std::vector<double> grid_log_terms;  // per grid point: -log n - log(2 pi sz sw) - log phi(z_g)
};

}  // namespace

YGrid YGrid::for_marginal(const GaussianKernel1D& marginal, std::size_t points) {
  if (points < kMinGridPoints) {
    fail(ErrorKind::configuration, "response grid needs at least " + std::to_string(kMinGridPoints) + " points");
  }
  const double lo = kde1d_quantile(marginal, 0.001);
  const double hi = kde1d_quantile(marginal, 0.999);
  const double pad = 0.1 * (hi - lo);
  YGrid grid;
  grid.points.resize(points);
  const double a = lo - pad;
  const double step = (hi + pad - a) / static_cast<double>(points - 1);
  for (std::size_t g = 0; g < points; ++g) grid.points[g] = a + step * static_cast<double>(g);
  grid.points.back() = hi + pad;
  return grid;
}

YGrid response_grid(const VineModel& vine, std::size_t points) {
  return YGrid::for_marginal(vine.marginals[require_target(vine)], points);
}

double trapezoid(std::span<const double> points, std::span<const double> values) {
  double total = 0.0;
  for (std::size_t g = 1; g < points.size(); ++g) {
    total += 0.5 * (points[g] - points[g - 1]) * (values[g] + values[g - 1]);
  }
  return total;
}

struct ConditionalDensity::Impl {
  const VineModel* vine = nullptr;
  YGrid grid;
  std::size_t target = 0;
  std::vector<double> log_marginal;  // log p(y_g)
  std::vector<double> u_target;      // F(y_g)
  bool separable = false;
  std::vector<SeparableEdge> edges;
  std::vector<const VineEdge*> other_edges;  // response edges of the first tree evaluated directly

  std::vector<double> full_point(std::span<const double> x) const {
    const std::size_t d = vine->dimension();
    if (x.size() == d) return {x.begin(), x.end()};
    if (x.size() + 1 != d) fail(ErrorKind::schema_mismatch, "feature vector has the wrong length");
    std::vector<double> full(d, 0.0);
    for (std::size_t j = 0, k = 0; j < d; ++j) {
      if (j != target) full[j] = x[k++];
    }
    return full;
  }

  std::vector<double> feature_cdfs(std::span<const double> full) const {
    std::vector<double> u(vine->dimension(), 0.5);
    for (std::size_t j = 0; j < u.size(); ++j) {
      if (j == target) continue;
      if (!std::isfinite(full[j])) fail(ErrorKind::domain, "feature values must be finite");
      u[j] = kde1d_cdf(vine->marginals[j], full[j]);
    }
    return u;
  }
};

ConditionalDensity::ConditionalDensity(const VineModel& vine, YGrid grid) : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.vine = &vine;
  m.target = require_target(vine);
  if (grid.points.size() < 2 || !std::is_sorted(grid.points.begin(), grid.points.end())) {
    fail(ErrorKind::configuration, "response grid must be increasing");
  }
  m.grid = std::move(grid);
  const auto& marginal = vine.marginals[m.target];
  for (double y : m.grid.points) m.log_marginal.push_back(kde1d_log_pdf(marginal, y));
  m.u_target = kde1d_cdf(marginal, m.grid.points);

  m.separable = vine.trees.size() <= 1;
  if (!m.separable || vine.trees.empty()) return;
  const std::size_t gcount = m.grid.points.size();
  for (const VineEdge& edge : vine.trees[0].edges) {
    if (edge.conditioned[0] != m.target && edge.conditioned[1] != m.target) continue;
    const auto* kernel = std::get_if<KernelCopula>(&edge.copula);
    if (kernel == nullptr || kernel->gamma() != 0.0) {
      m.other_edges.push_back(&edge);
      continue;
    }
    SeparableEdge s;
    s.response_first = edge.conditioned[0] == m.target;
    s.feature = s.response_first ? edge.conditioned[1] : edge.conditioned[0];
    s.copula = kernel;
    const auto& centers = s.response_first ? kernel->z_centers() : kernel->w_centers();
    const double sigma = s.response_first ? kernel->sigma_z() : kernel->sigma_w();
    const std::size_t n = kernel->size();
    const double log_norm = std::log(static_cast<double>(n)) +
                            std::log(2.0 * std::numbers::pi * kernel->sigma_z() * kernel->sigma_w());
    s.grid_kernel.resize(gcount * n);
    s.grid_log_terms.resize(gcount);
    for (std::size_t g = 0; g < gcount; ++g) {
      const double z = std_normal_quantile(clamp_unit(m.u_target[g]));
      for (std::size_t i = 0; i < n; ++i) {
        const double a = (z - centers[i]) / sigma;
        s.grid_kernel[g * n + i] = std::exp(-0.5 * a * a);
      }
      s.grid_log_terms[g] = -log_norm - std_normal_log_pdf(z);
    }
    m.edges.push_back(std::move(s));
  }
}

ConditionalDensity::~ConditionalDensity() = default;
ConditionalDensity::ConditionalDensity(ConditionalDensity&&) noexcept = default;
ConditionalDensity& ConditionalDensity::operator=(ConditionalDensity&&) noexcept = default;

const YGrid& ConditionalDensity::grid() const noexcept { return impl_->grid; }

std::vector<double> ConditionalDensity::density_reference(std::span<const double> x, bool all_factors) const {
  const Impl& m = *impl_;
  const auto full = m.full_point(x);
  auto u = m.feature_cdfs(full);
  std::vector<double> log_values(m.grid.points.size());
  std::optional<std::size_t> involving;
  if (!all_factors) involving = m.target;
  for (std::size_t g = 0; g < log_values.size(); ++g) {
    u[m.target] = m.u_target[g];
    log_values[g] = m.log_marginal[g] + pair_copula_log_sum(*m.vine, u, involving);
  }
  return normalize(m.grid.points, std::move(log_values));
}

std::vector<double> ConditionalDensity::density(std::span<const double> x) const {
  const Impl& m = *impl_;
  if (!m.separable) return density_reference(x);
  const auto full = m.full_point(x);
  const auto u = m.feature_cdfs(full);
  const std::size_t gcount = m.grid.points.size();
  std::vector<double> log_values = m.log_marginal;

  std::vector<double> feature_kernel;
  std::vector<double> sums(gcount);
  for (const SeparableEdge& s : m.edges) {
    const KernelCopula& c = *s.copula;
    const std::size_t n = c.size();
    const auto& centers = s.response_first ? c.w_centers() : c.z_centers();
    const double sigma = s.response_first ? c.sigma_w() : c.sigma_z();
    const double w = std_normal_quantile(clamp_unit(u[s.feature]));
    feature_kernel.resize(n);
    double closest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double b = (w - centers[i]) / sigma;
      feature_kernel[i] = 0.5 * b * b;
      closest = std::min(closest, feature_kernel[i]);
    }
    for (double& v : feature_kernel) v = std::exp(closest - v);
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t g = 0; g < gcount; ++g) {
      sums[g] = dot(s.grid_kernel.data() + g * n, feature_kernel.data(), n);
    }
    const double feature_terms = -closest - std_normal_log_pdf(w);
    for (std::size_t g = 0; g < gcount; ++g) log_values[g] += std::log(sums[g]) + s.grid_log_terms[g] + feature_terms;
  }
  for (const VineEdge* edge : m.other_edges) {
    for (std::size_t g = 0; g < gcount; ++g) {
      log_values[g] += npvine::log_density(edge->copula, edge->conditioned[0] == m.target ? m.u_target[g] : u[edge->conditioned[0]],
                                           edge->conditioned[1] == m.target ? m.u_target[g] : u[edge->conditioned[1]]);
    }
  }
  // Far outside the copula support every product can underflow; redo the row in log space.
  if (std::none_of(log_values.begin(), log_values.end(), [](double v) { return std::isfinite(v); })) {
    return density_reference(x);
  }
  return normalize(m.grid.points, std::move(log_values));
}

double ConditionalDensity::predict(std::span<const double> x, PointPredictor predictor) const {
  const auto& points = impl_->grid.points;
  const auto p = density(x);
  if (predictor == PointPredictor::mean) {
    std::vector<double> weighted(points.size());
    for (std::size_t g = 0; g < points.size(); ++g) weighted[g] = points[g] * p[g];
    return std::clamp(trapezoid(points, weighted), points.front(), points.back());
  }
  double cumulative = 0.0;
  for (std::size_t g = 1; g < points.size(); ++g) {
    const double piece = 0.5 * (points[g] - points[g - 1]) * (p[g] + p[g - 1]);
    if (cumulative + piece >= 0.5 && piece > 0.0) {
      return points[g - 1] + (0.5 - cumulative) / piece * (points[g] - points[g - 1]);
    }
    cumulative += piece;
  }
  return points.back();
}

std::vector<double> conditional_density(const VineModel& vine, std::span<const double> x, const YGrid& grid) {
  return ConditionalDensity(vine, grid).density(x);
}

double predict_mean(const VineModel& vine, std::span<const double> x, const YGrid& grid) {
  return ConditionalDensity(vine, grid).predict(x);
}

std::vector<double> predict(const VineModel& vine, const Dataset& data, const YGrid& grid, PointPredictor predictor) {
  const std::size_t target = require_target(vine);
  std::vector<std::string> features = vine.variable_names;
  features.erase(features.begin() + static_cast<std::ptrdiff_t>(target));
  const Dataset x = data.project(features);
  const ConditionalDensity model(vine, grid);
  std::vector<double> out(x.rows());
  parallel_for(x.rows(), [&](std::size_t i) { out[i] = model.predict(x.row(i), predictor); });
  return out;
}

double nmse(std::span<const double> predictions, std::span<const double> truth) {
  if (predictions.size() != truth.size() || truth.size() < 2) {
    fail(ErrorKind::domain, "nmse needs equal-length vectors with at least 2 entries");
  }
  const double n = static_cast<double>(truth.size());
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / n;
  double variance = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    variance += (truth[i] - mean) * (truth[i] - mean);
    error += (predictions[i] - truth[i]) * (predictions[i] - truth[i]);
  }
  if (variance == 0.0) fail(ErrorKind::degenerate_metric, "nmse is undefined for constant targets");
  return error / variance;
}

double test_log_likelihood(const VineModel& vine, const Dataset& test) {
  const Dataset data = test.project(vine.variable_names);
  if (data.rows() == 0) fail(ErrorKind::insufficient_data, "test set is empty");
  std::vector<double> values(data.rows());
  parallel_for(data.rows(), [&](std::size_t i) { values[i] = log_density(vine, data.row(i)); });
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

RegressionMetrics evaluate(const VineModel& vine, const Dataset& test, const YGrid& grid) {
  const std::size_t target = require_target(vine);
  const Dataset projected = test.project(vine.variable_names);
  const auto truth = projected.column(target);
  const auto predictions = predict(vine, test, grid);
  return {nmse(predictions, truth), test_log_likelihood(vine, test)};
}

}  // namespace npvine
