#include "npvine/generators.hpp"

#include <cmath>

#include "npvine/error.hpp"
#include "npvine/normal.hpp"
#include "npvine/rng.hpp"

namespace npvine {

namespace {

std::vector<std::string> numbered(std::string_view prefix, std::size_t count) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < count; ++j) names.push_back(std::string(prefix) + std::to_string(j + 1));
  return names;
}

// Latent standard-normal chain with corr(z_j, z_{j+1}) = rho.
std::vector<std::vector<double>> normal_chain(std::size_t n, std::size_t d, double rho, Rng& rng) {
  const double innovation = std::sqrt(1.0 - rho * rho);
  std::vector<std::vector<double>> z(d, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    z[0][i] = rng.normal();
    for (std::size_t j = 1; j < d; ++j) z[j][i] = rho * z[j - 1][i] + innovation * rng.normal();
  }
  return z;
}

}  // namespace

double MarginalSpec::quantile(double u) const {
  switch (kind) {
    case MarginalKind::normal: return first + second * std_normal_quantile(u);
    case MarginalKind::exponential: return -std::log1p(-u) / first;
    case MarginalKind::uniform: return first + (second - first) * u;
    case MarginalKind::lognormal: return std::exp(first + second * std_normal_quantile(u));
  }
  return u;
}

MarginalSpec parse_marginal(std::string_view name) {
  if (name == "normal") return {MarginalKind::normal, 0.0, 1.0};
  if (name == "exponential") return {MarginalKind::exponential, 1.0, 0.0};
  if (name == "uniform") return {MarginalKind::uniform, 0.0, 1.0};
  if (name == "lognormal") return {MarginalKind::lognormal, 0.0, 0.5};
  fail(ErrorKind::configuration, "unknown marginal '" + std::string(name) + "'");
}

Dataset gaussian_copula_chain(std::size_t n, std::size_t d, double rho, std::span<const MarginalSpec> marginals,
                              std::uint64_t seed) {
  if (d < 1) fail(ErrorKind::configuration, "generator needs d >= 1");
  if (!(std::abs(rho) < 1.0)) fail(ErrorKind::configuration, "rho must lie in (-1, 1)");
  if (marginals.size() > 1 && marginals.size() != d) {
    fail(ErrorKind::configuration, "give one marginal per column or a single marginal for all");
  }
  Rng rng(seed);
  auto columns = normal_chain(n, d, rho, rng);
  for (std::size_t j = 0; j < d; ++j) {
    const MarginalSpec law = marginals.empty() ? MarginalSpec{} : marginals[marginals.size() == 1 ? 0 : j];
    if (law.kind == MarginalKind::normal) {
      for (double& v : columns[j]) v = law.first + law.second * v;
      continue;
    }
    for (double& v : columns[j]) v = law.quantile(std_normal_cdf(v));
  }
  return Dataset(numbered("x", d), std::move(columns));
}

Dataset bimodal_chain(std::size_t n, std::size_t d, std::uint64_t seed, double slope, double separation,
                      double noise) {
  if (!(std::abs(slope) < 1.0)) fail(ErrorKind::configuration, "bimodal chain slope must lie in (-1, 1)");
  Rng rng(seed);
  const double stationary_sd = std::sqrt((separation * separation + noise * noise) / (1.0 - slope * slope));
  std::vector<std::vector<double>> columns(d, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    columns[0][i] = stationary_sd * rng.normal();
    for (std::size_t j = 1; j < d; ++j) {
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      columns[j][i] = slope * columns[j - 1][i] + separation * sign + noise * rng.normal();
    }
  }
  return Dataset(numbered("x", d), std::move(columns));
}

Dataset marginal_shift_task(std::size_t n, bool target, std::uint64_t seed, double shift) {
  auto data = gaussian_copula_chain(n, 5, 0.6, {}, seed);
  if (target) {
    std::vector<double> x3(data.column(2).begin(), data.column(2).end());
    for (double& v : x3) v += shift;
    data.set_column(2, std::move(x3));
  }
  return data;
}

Dataset copula_flip_task(std::size_t n, bool target, std::uint64_t seed, double rho) {
  Rng rng(seed);
  const double innovation = std::sqrt(1.0 - rho * rho);
  const double sign = target ? -1.0 : 1.0;
  std::vector<std::vector<double>> z(5, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    z[0][i] = rng.normal();
    z[1][i] = sign * rho * z[0][i] + innovation * rng.normal();
    z[2][i] = rho * z[0][i] + innovation * rng.normal();
    z[3][i] = rho * z[2][i] + innovation * rng.normal();
    z[4][i] = rho * z[3][i] + innovation * rng.normal();
  }
  return Dataset(numbered("x", 5), std::move(z));
}

Dataset regression_task(std::size_t n, std::size_t d, bool target, std::uint64_t seed, double noise) {
  if (d < 6) fail(ErrorKind::configuration, "regression task needs d >= 6");
  Rng rng(seed);
  const std::size_t features = d - 1;
  auto columns = normal_chain(n, features, 0.6, rng);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x4 = columns[3][i];
    const double x5 = columns[4][i];
    y[i] = 0.8 * x4 + 0.6 * std::tanh(1.5 * x5) + noise * rng.normal();
  }
  if (target) {
    for (std::size_t j = 1; j < features; j += 2) {
      for (double& v : columns[j]) v = 1.5 + 1.4 * v;
    }
    for (double& v : y) v += 0.25;
  }
  auto names = numbered("x", features);
  names.push_back("y");
  columns.push_back(std::move(y));
  return Dataset(std::move(names), std::move(columns));
}

std::vector<std::string> generator_names() {
  return {"gaussian-copula", "bimodal", "marginal-shift", "copula-flip", "regression"};
}

Dataset make_dataset(const GeneratorRequest& r) {
  if (r.name == "gaussian-copula") return gaussian_copula_chain(r.n, r.d, r.rho, r.marginals, r.seed);
  if (r.name == "bimodal") return bimodal_chain(r.n, r.d, r.seed);
  if (r.name == "marginal-shift") return marginal_shift_task(r.n, r.target, r.seed);
  if (r.name == "copula-flip") return copula_flip_task(r.n, r.target, r.seed);
  if (r.name == "regression") return regression_task(r.n, r.d, r.target, r.seed, r.noise);
  fail(ErrorKind::configuration, "unknown generator '" + r.name + "'");
}

}  // namespace npvine
