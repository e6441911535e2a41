#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "npvine/dataset.hpp"

namespace npvine {

enum class MarginalKind { normal, exponential, uniform, lognormal };

/// Marginal law applied to a uniform variate through its quantile function.
/// normal(mean, sd), exponential(rate, unused), uniform(low, high), lognormal(log-mean, log-sd).
struct MarginalSpec {
  MarginalKind kind = MarginalKind::normal;
  double first = 0.0;
  double second = 1.0;

  double quantile(double u) const;
};

/// Parses "normal", "exponential", "uniform" or "lognormal" with default parameters.
MarginalSpec parse_marginal(std::string_view name);

/// Gaussian copula with Markov-chain correlation (corr(z_j, z_k) = rho^|j-k|),
/// sampled as correlated standard normals mapped through Phi and the marginal
/// quantiles. `marginals` holds one law per column, one law for all, or none (standard normal).
Dataset gaussian_copula_chain(std::size_t n, std::size_t d, double rho, std::span<const MarginalSpec> marginals,
                              std::uint64_t seed);

/// Chain x_{k+1} = slope * x_k + separation * s_k + noise * e_k with random
/// signs s_k: each consecutive pair has a two-band, non-Gaussian copula.
Dataset bimodal_chain(std::size_t n, std::size_t d, std::uint64_t seed, double slope = 0.5, double separation = 2.0,
                      double noise = 0.3);

/// Five-variable Gaussian-copula chain; the target domain moves x3 by `shift` standard deviations.
Dataset marginal_shift_task(std::size_t n, bool target, std::uint64_t seed, double shift = 3.0);

/// Five variables with edges x1-x2, x1-x3, x3-x4, x4-x5; the target domain
/// flips the sign of the x1-x2 dependence and keeps every marginal.
Dataset copula_flip_task(std::size_t n, bool target, std::uint64_t seed, double rho = 0.7);

/// Regression task with features x1..x_{d-1} and response y (last column).
/// Latent features form a Gaussian chain and y depends on x4 and x5. The target
/// domain shifts and rescales several feature marginals and shifts y mildly,
/// keeping the latent dependence.
Dataset regression_task(std::size_t n, std::size_t d, bool target, std::uint64_t seed, double noise = 0.5);

/// Names accepted by make_dataset.
std::vector<std::string> generator_names();

struct GeneratorRequest {
  std::string name;
  std::size_t n = 1000;
  std::size_t d = 2;
  double rho = 0.8;
  std::vector<MarginalSpec> marginals;
  bool target = false;
  double noise = 0.5;
  std::uint64_t seed = 0;
};

/// Dispatches a request by generator name; throws Error(configuration) for unknown names.
Dataset make_dataset(const GeneratorRequest& request);

}  // namespace npvine
