#pragma once

#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace npvine {

/// Arguments closer than this to 0 or 1 are clamped before the Gaussian transform.
inline constexpr double kBoundaryEps = 1e-10;

/// Kernel copula estimated in Gaussian space.
///
/// Each pseudo-observation (u_i, v_i) becomes a bivariate normal kernel centred
/// at (z_i, w_i) = (Phi^-1(u_i), Phi^-1(v_i)) with covariance
///   [[sigma_z^2, gamma sigma_z sigma_w], [gamma sigma_z sigma_w, sigma_w^2]],
/// i.e. gamma is the kernel correlation and |gamma| < 1. The copula density is
/// the kernel mixture divided by phi(z) phi(w).
class KernelCopula {
 public:
  KernelCopula(std::vector<double> z_centers, std::vector<double> w_centers, double sigma_z, double sigma_w,
               double gamma = 0.0);

  const std::vector<double>& z_centers() const noexcept { return z_; }
  const std::vector<double>& w_centers() const noexcept { return w_; }
  double sigma_z() const noexcept { return sigma_z_; }
  double sigma_w() const noexcept { return sigma_w_; }
  double gamma() const noexcept { return gamma_; }
  std::size_t size() const noexcept { return z_.size(); }

  /// Same estimator with the roles of the two arguments exchanged.
  KernelCopula swapped() const;

 private:
  std::vector<double> z_;
  std::vector<double> w_;
  double sigma_z_;
  double sigma_w_;
  double gamma_;
};

/// Bivariate Gaussian copula with correlation |rho| < 1.
struct GaussianCopula {
  explicit GaussianCopula(double rho);
  double rho;
};

/// Density identically 1.
struct IndependenceCopula {};

using PairCopula = std::variant<IndependenceCopula, GaussianCopula, KernelCopula>;

/// z = Phi^-1(u), w = Phi^-1(v); Silverman bandwidths at dim = 2; gamma as given.
/// Throws Error(domain) for values outside (0,1) or unequal lengths.
KernelCopula fit_kernel_copula(std::span<const double> u, std::span<const double> v, double gamma = 0.0);

/// Throws Error(domain) unless u and v lie strictly inside (0,1).
double kernel_copula_density(const KernelCopula& c, double u, double v);
double kernel_copula_log_density(const KernelCopula& c, double u, double v);

/// Conditional cdf P(U <= u | V = v), normalized by its u -> 1 limit so it
/// reaches exactly 1. u <= 0 and u >= 1 return 0 and 1; other arguments are
/// clamped to [eps, 1 - eps].
double h_function(const KernelCopula& c, double u, double v, double eps = kBoundaryEps);

/// P(V <= v | U = u), the h-function conditioning on the first argument.
double h_function_given_first(const KernelCopula& c, double u, double v, double eps = kBoundaryEps);

/// Solves h_function(c, u, v) = p for u by bisection.
double inverse_h_function(const KernelCopula& c, double p, double v, double eps = kBoundaryEps);

/// rho = sin(pi tau / 2) from Kendall's tau, clamped to [-0.999, 0.999].
GaussianCopula fit_gaussian_copula(std::span<const double> u, std::span<const double> v);

double gaussian_copula_density(const GaussianCopula& c, double u, double v, double eps = kBoundaryEps);
double gaussian_copula_log_density(const GaussianCopula& c, double u, double v, double eps = kBoundaryEps);

/// Phi((Phi^-1(u) - rho Phi^-1(v)) / sqrt(1 - rho^2)).
double gaussian_h_function(const GaussianCopula& c, double u, double v, double eps = kBoundaryEps);
double gaussian_inverse_h_function(const GaussianCopula& c, double p, double v, double eps = kBoundaryEps);

// Uniform interface over PairCopula. Arguments are clamped to [eps, 1 - eps].

double log_density(const PairCopula& c, double u, double v);

/// P(first <= u | second = v).
double h_given_second(const PairCopula& c, double u, double v);

/// P(second <= v | first = u).
double h_given_first(const PairCopula& c, double u, double v);

/// Inverse of h_given_second in its first argument.
double inverse_h_given_second(const PairCopula& c, double p, double v);

std::string_view kind_name(const PairCopula& c) noexcept;

/// Which family fit_pair_copula estimates.
enum class CopulaFamily { kernel, gaussian, independence };

PairCopula fit_pair_copula(CopulaFamily family, std::span<const double> u, std::span<const double> v);

std::string_view family_name(CopulaFamily family) noexcept;

/// Inverse of family_name; throws Error(configuration) on an unknown name.
CopulaFamily parse_family(std::string_view name);

}  // namespace npvine
