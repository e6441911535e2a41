#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "npvine/bicopula.hpp"
#include "npvine/error.hpp"
#include "npvine/kde.hpp"
#include "npvine/normal.hpp"
#include "npvine/rng.hpp"
#include "support/oracles.hpp"

namespace npvine {
namespace {

using testing::gaussian_copula_sample;
using testing::integrate;

// Normalized partial integral of the copula density in its first argument,
// computed in Gaussian space: int_{-inf}^{Phi^-1(u)} c(Phi(t), v) phi(t) dt.
double h_oracle(const KernelCopula& c, double u, double v) {
  auto integrand = [&](double t) {
    const double x = std_normal_cdf(t);
    if (!(x > 0.0 && x < 1.0)) return 0.0;
    return kernel_copula_density(c, x, v) * std_normal_pdf(t);
  };
  const double upper = std_normal_quantile(u);
  const double partial = integrate(integrand, -std::numeric_limits<double>::infinity(), upper, 1e-10);
  const double whole = integrate(integrand, -std::numeric_limits<double>::infinity(),
                                 std::numeric_limits<double>::infinity(), 1e-10);
  return partial / whole;
}

TEST(FitKernelCopula, CentersAreGaussianQuantiles) {
  const std::vector<double> u{std_normal_cdf(-1.0), 0.5, std_normal_cdf(1.0)};
  const auto c = fit_kernel_copula(u, u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(c.z_centers()[i], static_cast<double>(i) - 1.0, 1e-12);
    EXPECT_NEAR(c.w_centers()[i], static_cast<double>(i) - 1.0, 1e-12);
  }
  EXPECT_EQ(c.gamma(), 0.0);
}

TEST(FitKernelCopula, SilvermanBandwidthsInGaussianSpace) {
  auto z = testing::normal_sample(1000, 17);
  const double sd = sample_sd(z);
  for (auto& v : z) v /= sd;
  auto w = testing::normal_sample(1000, 18);
  std::vector<double> u(z.size()), v(w.size()), shifted(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    u[i] = std_normal_cdf(z[i]);
    v[i] = std_normal_cdf(w[i]);
    shifted[i] = std_normal_cdf(z[i] + 0.4);
  }
  const auto c = fit_kernel_copula(u, v);
  EXPECT_NEAR(c.sigma_z(), 0.31622776601683794, 1e-9);
  EXPECT_NEAR(fit_kernel_copula(shifted, v).sigma_z(), c.sigma_z(), 1e-9);
}

TEST(FitKernelCopula, RejectsOutOfRangeInput) {
  const std::vector<double> good{0.2, 0.5, 0.7};
  const std::vector<double> bad{0.2, 1.0, 0.7};
  try {
    fit_kernel_copula(good, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
}

TEST(FitKernelCopula, InvariantUnderIncreasingMarginalTransforms) {
  const auto [u, v] = gaussian_copula_sample(300, 0.6, 5);
  std::vector<double> x(u.size()), ex(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    x[i] = std_normal_quantile(u[i]);
    ex[i] = std::exp(x[i]);
  }
  const auto a = fit_kernel_copula(rank_pseudo_observations(x), v);
  const auto b = fit_kernel_copula(rank_pseudo_observations(ex), v);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.z_centers()[i], b.z_centers()[i], 1e-9);
}

TEST(KernelCopulaDensity, SingleStandardKernelIsIndependence) {
  const KernelCopula c({0.0}, {0.0}, 1.0, 1.0, 0.0);
  EXPECT_NEAR(kernel_copula_density(c, 0.5, 0.5), 1.0, 1e-14);
  EXPECT_NEAR(kernel_copula_density(c, 0.1, 0.93), 1.0, 1e-12);
  EXPECT_THROW(kernel_copula_density(c, 0.0, 0.5), Error);
  EXPECT_THROW(kernel_copula_density(c, 0.5, 1.0), Error);
}

TEST(KernelCopulaDensity, IntegratesToOneOnGaussLegendreGrid) {
  const testing::GaussLegendre gl(200, 0.0, 1.0);
  Rng rng(31);
  for (int model = 0; model < 5; ++model) {
    const std::size_t n = 200 + rng.below(801);
    const double rho = 1.8 * rng.uniform() - 0.9;
    const auto [u, v] = gaussian_copula_sample(n, rho, 100 + model);
    const auto c = fit_kernel_copula(u, v);
    double mass = 0.0;
    for (std::size_t i = 0; i < 200; ++i) {
      for (std::size_t j = 0; j < 200; ++j) {
        mass += gl.weights[i] * gl.weights[j] * kernel_copula_density(c, gl.nodes[i], gl.nodes[j]);
      }
    }
    EXPECT_NEAR(mass, 1.0, 2e-2) << "n=" << n << " rho=" << rho;
  }
}

TEST(KernelCopulaDensity, RecoversGaussianCopulaBetterThanIndependence) {
  const auto [u, v] = gaussian_copula_sample(500, 0.8, 2016);
  const auto kernel = fit_kernel_copula(u, v);
  const GaussianCopula truth(0.8);
  double kernel_error = 0.0;
  double independence_error = 0.0;
  int points = 0;
  for (double a = 0.05; a <= 0.9501; a += 0.05) {
    for (double b = 0.05; b <= 0.9501; b += 0.05) {
      const double exact = gaussian_copula_density(truth, a, b);
      kernel_error += std::abs(kernel_copula_density(kernel, a, b) - exact);
      independence_error += std::abs(1.0 - exact);
      ++points;
    }
  }
  EXPECT_LT(kernel_error / points, independence_error / points);
}

TEST(HFunction, ReachesOneAndIsMonotone) {
  const auto [u, v] = gaussian_copula_sample(300, -0.5, 8);
  const auto c = fit_kernel_copula(u, v);
  EXPECT_EQ(h_function(c, 1.0, 0.3), 1.0);
  EXPECT_EQ(h_function(c, 0.0, 0.3), 0.0);
  EXPECT_NEAR(h_function(c, 1.0 - 1e-13, 0.3), 1.0, 1e-9);
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const double a = rng.uniform_open();
    const double b = rng.uniform_open();
    const double cond = rng.uniform_open();
    const double ha = h_function(c, std::min(a, b), cond);
    const double hb = h_function(c, std::max(a, b), cond);
    EXPECT_LE(ha, hb);
    EXPECT_GE(ha, 0.0);
    EXPECT_LE(hb, 1.0);
  }
}

TEST(HFunction, ZeroCorrelationSingleKernelIgnoresConditioningValue) {
  const KernelCopula c({0.0}, {0.0}, 0.6, 0.4, 0.0);
  EXPECT_NEAR(h_function(c, 0.5, 0.2), h_function(c, 0.5, 0.8), 1e-12);
  EXPECT_NEAR(h_function(c, 0.3, 0.2), std_normal_cdf(std_normal_quantile(0.3) / 0.6), 1e-12);
}

TEST(HFunction, MatchesQuadratureOfDensity) {
  const auto [u, v] = gaussian_copula_sample(150, 0.7, 77);
  const auto diagonal = fit_kernel_copula(u, v);
  const KernelCopula correlated(diagonal.z_centers(), diagonal.w_centers(), diagonal.sigma_z(), diagonal.sigma_w(), 0.5);
  for (const KernelCopula* c : {&diagonal, &correlated}) {
    double worst = 0.0;
    for (int i = 1; i <= 50; i += 7) {
      for (int j = 1; j <= 50; j += 7) {
        const double a = i / 51.0;
        const double b = j / 51.0;
        worst = std::max(worst, std::abs(h_function(*c, a, b) - h_oracle(*c, a, b)));
        const KernelCopula swapped = c->swapped();
        worst = std::max(worst, std::abs(h_function_given_first(*c, b, a) - h_oracle(swapped, a, b)));
      }
    }
    EXPECT_LE(worst, 1e-3) << "gamma=" << c->gamma();
  }
}

TEST(HFunction, InverseRoundTrip) {
  const auto [u, v] = gaussian_copula_sample(200, 0.4, 12);
  const auto c = fit_kernel_copula(u, v);
  for (double p : {0.01, 0.3, 0.5, 0.9}) {
    for (double cond : {0.05, 0.5, 0.97}) {
      EXPECT_NEAR(h_function(c, inverse_h_function(c, p, cond), cond), p, 1e-9);
    }
  }
}

TEST(GaussianCopula, FitFromKendallTau) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_EQ(fit_gaussian_copula(x, x).rho, 0.999);
  EXPECT_EQ(fit_gaussian_copula(std::vector<double>{1, 2, 3, 4}, std::vector<double>{2, 4, 1, 3}).rho, 0.0);
  EXPECT_NEAR(fit_gaussian_copula(x, std::vector<double>{2, 1, 3}).rho, 0.5, 1e-15);
  EXPECT_THROW(GaussianCopula(1.0), Error);
}

TEST(GaussianCopula, DensityValues) {
  const GaussianCopula zero(0.0);
  const GaussianCopula strong(0.8);
  for (double a : {0.1, 0.5, 0.77}) {
    for (double b : {0.02, 0.4, 0.99}) {
      EXPECT_NEAR(gaussian_copula_density(zero, a, b), 1.0, 1e-15);
      EXPECT_NEAR(gaussian_copula_density(strong, a, b), gaussian_copula_density(strong, b, a), 1e-12);
    }
  }
  EXPECT_NEAR(gaussian_copula_density(strong, 0.5, 0.5), 1.0 / 0.6, 1e-12);
}

TEST(GaussianCopula, HFunctionValuesAndDerivativeOfCdf) {
  EXPECT_NEAR(gaussian_h_function(GaussianCopula(0.0), 0.37, 0.81), 0.37, 1e-15);
  EXPECT_NEAR(gaussian_h_function(GaussianCopula(0.6), 0.5, 0.5), 0.5, 1e-15);

  // dC/dv by central differences of the quadrature copula cdf C(u,v) = int int c.
  const GaussianCopula c(0.6);
  auto cdf = [&](double u, double v) {
    auto inner = [&](double t) {
      const double x = std_normal_cdf(t);
      auto over_s = [&](double s) {
        return gaussian_copula_density(c, x, std_normal_cdf(s)) * std_normal_pdf(s);
      };
      return integrate(over_s, -std::numeric_limits<double>::infinity(), std_normal_quantile(v), 1e-12) *
             std_normal_pdf(t);
    };
    return integrate(inner, -std::numeric_limits<double>::infinity(), std_normal_quantile(u), 1e-12);
  };
  const double step = 1e-4;
  for (auto [u, v] : {std::pair{0.3, 0.6}, std::pair{0.8, 0.2}, std::pair{0.5, 0.9}}) {
    const double fd = (cdf(u, v + step) - cdf(u, v - step)) / (2 * step);
    EXPECT_NEAR(gaussian_h_function(c, u, v), fd, 1e-4);
  }
}

TEST(IndependenceCopula, DensityOneAndHIdentity) {
  const PairCopula c = IndependenceCopula{};
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform_open();
    const double b = rng.uniform_open();
    EXPECT_EQ(log_density(c, a, b), 0.0);
    EXPECT_EQ(h_given_second(c, a, b), a);
    EXPECT_EQ(h_given_first(c, a, b), b);
  }
}

TEST(PairCopula, DispatchMatchesFamilyFunctions) {
  const auto [u, v] = gaussian_copula_sample(100, 0.3, 9);
  const PairCopula kernel = fit_pair_copula(CopulaFamily::kernel, u, v);
  const PairCopula gauss = fit_pair_copula(CopulaFamily::gaussian, u, v);
  EXPECT_EQ(kind_name(kernel), "kernel");
  EXPECT_EQ(kind_name(gauss), "gaussian");
  const auto& k = std::get<KernelCopula>(kernel);
  EXPECT_DOUBLE_EQ(log_density(kernel, 0.2, 0.7), kernel_copula_log_density(k, 0.2, 0.7));
  EXPECT_DOUBLE_EQ(h_given_first(kernel, 0.2, 0.7), h_function(k.swapped(), 0.7, 0.2));
  EXPECT_TRUE(std::isfinite(log_density(kernel, 0.0, 1.0)));
  const auto& g = std::get<GaussianCopula>(gauss);
  EXPECT_DOUBLE_EQ(h_given_first(gauss, 0.2, 0.7), gaussian_h_function(g, 0.7, 0.2));
}

}  // namespace
}  // namespace npvine
