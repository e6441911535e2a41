#include "npvine/bicopula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "npvine/error.hpp"
#include "npvine/kde.hpp"
#include "npvine/kendall.hpp"
#include "npvine/normal.hpp"

namespace npvine {

namespace {

double clamp_unit(double x, double eps) { return std::clamp(x, eps, 1.0 - eps); }

void require_interior(double u, double v) {
  if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0)) {
    fail(ErrorKind::domain, "copula density needs arguments strictly inside (0,1)");
  }
}

// Normalized conditional cdf of the kernel mixture: P(A <= a | B = b) in
// Gaussian space, where a-centers/sigma_a belong to the free argument and
// b-centers/sigma_b to the conditioning one.
double kernel_conditional_cdf(std::span<const double> a_centers, std::span<const double> b_centers, double sigma_a,
                              double sigma_b, double gamma, double a, double b) {
  const std::size_t n = a_centers.size();
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (b - b_centers[i]) / sigma_b;
    top = std::max(top, -0.5 * t * t);
  }
  const double slope = gamma * sigma_a / sigma_b;
  const double cond_sd = sigma_a * std::sqrt(1.0 - gamma * gamma);
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (b - b_centers[i]) / sigma_b;
    const double weight = std::exp(-0.5 * t * t - top);
    const double mean = a_centers[i] + slope * (b - b_centers[i]);
    numerator += weight * std_normal_cdf((a - mean) / cond_sd);
    denominator += weight;
  }
  return std::clamp(numerator / denominator, 0.0, 1.0);
}

}  // namespace

KernelCopula::KernelCopula(std::vector<double> z_centers, std::vector<double> w_centers, double sigma_z,
                           double sigma_w, double gamma)
    : z_(std::move(z_centers)), w_(std::move(w_centers)), sigma_z_(sigma_z), sigma_w_(sigma_w), gamma_(gamma) {
  if (z_.size() != w_.size()) fail(ErrorKind::domain, "kernel copula centers differ in length");
  if (z_.empty()) fail(ErrorKind::insufficient_data, "kernel copula needs at least one center");
  if (!(sigma_z_ > 0.0) || !(sigma_w_ > 0.0) || !std::isfinite(sigma_z_) || !std::isfinite(sigma_w_)) {
    fail(ErrorKind::domain, "kernel copula bandwidths must be positive and finite");
  }
  if (!(std::abs(gamma_) < 1.0)) fail(ErrorKind::domain, "kernel copula correlation must satisfy |gamma| < 1");
}

KernelCopula KernelCopula::swapped() const { return KernelCopula(w_, z_, sigma_w_, sigma_z_, gamma_); }

GaussianCopula::GaussianCopula(double r) : rho(r) {
  if (!(std::abs(rho) < 1.0)) fail(ErrorKind::domain, "Gaussian copula needs |rho| < 1");
}

KernelCopula fit_kernel_copula(std::span<const double> u, std::span<const double> v, double gamma) {
  if (u.size() != v.size()) fail(ErrorKind::domain, "fit_kernel_copula: u and v differ in length");
  if (u.size() < 2) fail(ErrorKind::insufficient_data, "fit_kernel_copula needs at least 2 pairs");
  std::vector<double> z(u.size());
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    z[i] = std_normal_quantile(u[i]);
    w[i] = std_normal_quantile(v[i]);
  }
  const double sigma_z = silverman_bandwidth(z, 2);
  const double sigma_w = silverman_bandwidth(w, 2);
  return KernelCopula(std::move(z), std::move(w), sigma_z, sigma_w, gamma);
}

double kernel_copula_log_density(const KernelCopula& c, double u, double v) {
  require_interior(u, v);
  const double z = std_normal_quantile(u);
  const double w = std_normal_quantile(v);
  const double g = c.gamma();
  const double one_minus = 1.0 - g * g;
  const auto& zc = c.z_centers();
  const auto& wc = c.w_centers();
  const std::size_t n = c.size();

  std::vector<double> exponents(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = (z - zc[i]) / c.sigma_z();
    const double b = (w - wc[i]) / c.sigma_w();
    exponents[i] = -0.5 * (a * a - 2.0 * g * a * b + b * b) / one_minus;
    top = std::max(top, exponents[i]);
  }
  double total = 0.0;
  for (const double e : exponents) total += std::exp(e - top);

  const double log_kernel_norm = std::log(2.0 * std::numbers::pi * c.sigma_z() * c.sigma_w() * std::sqrt(one_minus));
  const double log_mixture = top + std::log(total) - std::log(static_cast<double>(n)) - log_kernel_norm;
  return log_mixture - std_normal_log_pdf(z) - std_normal_log_pdf(w);
}

double kernel_copula_density(const KernelCopula& c, double u, double v) {
  return std::exp(kernel_copula_log_density(c, u, v));
}

double h_function(const KernelCopula& c, double u, double v, double eps) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double z = std_normal_quantile(clamp_unit(u, eps));
  const double w = std_normal_quantile(clamp_unit(v, eps));
  return kernel_conditional_cdf(c.z_centers(), c.w_centers(), c.sigma_z(), c.sigma_w(), c.gamma(), z, w);
}

double h_function_given_first(const KernelCopula& c, double u, double v, double eps) {
  if (v <= 0.0) return 0.0;
  if (v >= 1.0) return 1.0;
  const double z = std_normal_quantile(clamp_unit(u, eps));
  const double w = std_normal_quantile(clamp_unit(v, eps));
  return kernel_conditional_cdf(c.w_centers(), c.z_centers(), c.sigma_w(), c.sigma_z(), c.gamma(), w, z);
}

double inverse_h_function(const KernelCopula& c, double p, double v, double eps) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::domain, "inverse_h_function: p must lie in [0,1]");
  double lo = eps;
  double hi = 1.0 - eps;
  if (h_function(c, lo, v, eps) >= p) return lo;
  if (h_function(c, hi, v, eps) <= p) return hi;
  // Bisect in Gaussian space, where the h-function is smooth and unbounded support is compact.
  double zlo = std_normal_quantile(lo);
  double zhi = std_normal_quantile(hi);
  for (int iter = 0; iter < 200 && zhi - zlo > 1e-13; ++iter) {
    const double mid = 0.5 * (zlo + zhi);
    if (h_function(c, std_normal_cdf(mid), v, eps) < p) zlo = mid; else zhi = mid;
  }
  return std_normal_cdf(0.5 * (zlo + zhi));
}

GaussianCopula fit_gaussian_copula(std::span<const double> u, std::span<const double> v) {
  const double tau = kendall_tau(u, v);
  const double rho = std::sin(std::numbers::pi * tau / 2.0);
  return GaussianCopula(std::clamp(rho, -0.999, 0.999));
}

double gaussian_copula_log_density(const GaussianCopula& c, double u, double v, double eps) {
  const double z = std_normal_quantile(clamp_unit(u, eps));
  const double w = std_normal_quantile(clamp_unit(v, eps));
  const double r = c.rho;
  const double one_minus = 1.0 - r * r;
  return -(r * r * (z * z + w * w) - 2.0 * r * z * w) / (2.0 * one_minus) - 0.5 * std::log(one_minus);
}

double gaussian_copula_density(const GaussianCopula& c, double u, double v, double eps) {
  return std::exp(gaussian_copula_log_density(c, u, v, eps));
}

double gaussian_h_function(const GaussianCopula& c, double u, double v, double eps) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double z = std_normal_quantile(clamp_unit(u, eps));
  const double w = std_normal_quantile(clamp_unit(v, eps));
  return std_normal_cdf((z - c.rho * w) / std::sqrt(1.0 - c.rho * c.rho));
}

double gaussian_inverse_h_function(const GaussianCopula& c, double p, double v, double eps) {
  const double w = std_normal_quantile(clamp_unit(v, eps));
  const double q = std_normal_quantile(clamp_unit(p, eps));
  return std_normal_cdf(c.rho * w + std::sqrt(1.0 - c.rho * c.rho) * q);
}

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

}  // namespace

double log_density(const PairCopula& c, double u, double v) {
  return std::visit(overloaded{
                        [](const IndependenceCopula&) { return 0.0; },
                        [&](const GaussianCopula& g) { return gaussian_copula_log_density(g, u, v); },
                        [&](const KernelCopula& k) {
                          return kernel_copula_log_density(k, clamp_unit(u, kBoundaryEps), clamp_unit(v, kBoundaryEps));
                        },
                    },
                    c);
}

double h_given_second(const PairCopula& c, double u, double v) {
  return std::visit(overloaded{
                        [&](const IndependenceCopula&) { return std::clamp(u, 0.0, 1.0); },
                        [&](const GaussianCopula& g) { return gaussian_h_function(g, u, v); },
                        [&](const KernelCopula& k) { return h_function(k, u, v); },
                    },
                    c);
}

double h_given_first(const PairCopula& c, double u, double v) {
  return std::visit(overloaded{
                        [&](const IndependenceCopula&) { return std::clamp(v, 0.0, 1.0); },
                        [&](const GaussianCopula& g) { return gaussian_h_function(g, v, u); },
                        [&](const KernelCopula& k) { return h_function_given_first(k, u, v); },
                    },
                    c);
}

double inverse_h_given_second(const PairCopula& c, double p, double v) {
  return std::visit(overloaded{
                        [&](const IndependenceCopula&) { return p; },
                        [&](const GaussianCopula& g) { return gaussian_inverse_h_function(g, p, v); },
                        [&](const KernelCopula& k) { return inverse_h_function(k, p, v); },
                    },
                    c);
}

std::string_view kind_name(const PairCopula& c) noexcept {
  return std::visit(overloaded{
                        [](const IndependenceCopula&) { return std::string_view("independence"); },
                        [](const GaussianCopula&) { return std::string_view("gaussian"); },
                        [](const KernelCopula&) { return std::string_view("kernel"); },
                    },
                    c);
}

PairCopula fit_pair_copula(CopulaFamily family, std::span<const double> u, std::span<const double> v) {
  switch (family) {
    case CopulaFamily::kernel: return fit_kernel_copula(u, v);
    case CopulaFamily::gaussian: return fit_gaussian_copula(u, v);
    case CopulaFamily::independence: return IndependenceCopula{};
  }
  return IndependenceCopula{};
}

std::string_view family_name(CopulaFamily family) noexcept {
  switch (family) {
    case CopulaFamily::kernel: return "kernel";
    case CopulaFamily::gaussian: return "gaussian";
    case CopulaFamily::independence: return "independence";
  }
  return "kernel";
}

CopulaFamily parse_family(std::string_view name) {
  for (auto family : {CopulaFamily::kernel, CopulaFamily::gaussian, CopulaFamily::independence}) {
    if (family_name(family) == name) return family;
  }
  fail(ErrorKind::configuration, "unknown copula family '" + std::string(name) + "'");
}

}  // namespace npvine
