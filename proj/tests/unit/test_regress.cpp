#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "npvine/error.hpp"
#include "npvine/generators.hpp"
#include "npvine/kde.hpp"
#include "npvine/regress.hpp"
#include "npvine/rng.hpp"
#include "support/oracles.hpp"

namespace npvine {
namespace {

VineModel fit_target_last(const Dataset& data, std::size_t truncation = 1,
                          CopulaFamily family = CopulaFamily::kernel) {
  VineFitOptions options;
  options.target_index = data.cols() - 1;
  options.truncation = truncation;
  options.family = family;
  return fit_vine(data, options);
}

Dataset linear_data(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.normal();
    y[i] = 2.0 * x[i] + 0.5 * rng.normal();
  }
  return Dataset({"x", "y"}, {x, y});
}

TEST(YGrid, CoversExpandedQuantileRange) {
  const auto marginal = GaussianKernel1D::fit(testing::normal_sample(300, 1));
  const auto grid = YGrid::for_marginal(marginal);
  ASSERT_EQ(grid.points.size(), 257u);
  EXPECT_TRUE(std::is_sorted(grid.points.begin(), grid.points.end()));
  EXPECT_TRUE(std::adjacent_find(grid.points.begin(), grid.points.end()) == grid.points.end());
  const double lo = kde1d_quantile(marginal, 0.001);
  const double hi = kde1d_quantile(marginal, 0.999);
  EXPECT_NEAR(grid.points.front(), lo - 0.1 * (hi - lo), 1e-12);
  EXPECT_NEAR(grid.points.back(), hi + 0.1 * (hi - lo), 1e-12);
  EXPECT_THROW(YGrid::for_marginal(marginal, 32), Error);
}

TEST(ConditionalDensityTest, IndependentResponseGivesMarginal) {
  const auto data = regression_task(200, 6, false, 3);
  const auto vine = fit_target_last(data, 1, CopulaFamily::independence);
  const auto grid = response_grid(vine);
  std::vector<double> expected;
  for (double y : grid.points) expected.push_back(kde1d_pdf(vine.marginals[5], y));
  const double mass = trapezoid(grid.points, expected);
  const auto row = data.row(7);
  const auto p = conditional_density(vine, row, grid);
  for (std::size_t g = 0; g < p.size(); ++g) EXPECT_NEAR(p[g], expected[g] / mass, 1e-12);

  std::vector<double> weighted;
  for (std::size_t g = 0; g < p.size(); ++g) weighted.push_back(grid.points[g] * expected[g] / mass);
  const double mean = trapezoid(grid.points, weighted);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(predict_mean(vine, data.row(i), grid), mean, 1e-12);
}

TEST(ConditionalDensityTest, TwoVariablesMatchJointOverMarginal) {
  const auto data = linear_data(300, 4);
  const auto vine = fit_target_last(data);
  const auto grid = response_grid(vine);
  double worst = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    const double x = data.at(i * 13, 0);
    auto joint = [&](double y) { return std::exp(log_density(vine, std::vector<double>{x, y})); };
    const double inf = std::numeric_limits<double>::infinity();
    const double px = testing::integrate(joint, -inf, inf, 1e-12);
    const auto p = conditional_density(vine, std::vector<double>{x}, grid);
    const double peak = *std::max_element(p.begin(), p.end());
    for (std::size_t g = 0; g < p.size(); ++g) {
      const double oracle = joint(grid.points[g]) / px;
      if (oracle > 1e-3 * peak) worst = std::max(worst, std::abs(p[g] - oracle) / oracle);
    }
  }
  EXPECT_LE(worst, 1e-3);
}

TEST(ConditionalDensityTest, NormalizedNonNegativeAndFastPathAgrees) {
  const auto data = regression_task(250, 8, false, 5);
  const auto vine = fit_target_last(data);
  const ConditionalDensity model(vine, response_grid(vine));
  const auto& grid = model.grid().points;
  for (std::size_t i = 0; i < 20; ++i) {
    auto row = data.row(i * 7);
    if (i % 5 == 0) row[3] += 8.0;  // far outside the feature range
    const auto fast = model.density(row);
    const auto reference = model.density_reference(row);
    EXPECT_NEAR(trapezoid(grid, fast), 1.0, 1e-9);
    for (std::size_t g = 0; g < fast.size(); ++g) {
      EXPECT_GE(fast[g], 0.0);
      EXPECT_NEAR(fast[g], reference[g], 1e-10 * (1.0 + reference[g]));
    }
    const double mean = model.predict(row);
    EXPECT_GE(mean, grid.front());
    EXPECT_LE(mean, grid.back());
  }
}

TEST(ConditionalDensityTest, ResponseFactorsAloneGiveSameDensity) {
  const auto data = regression_task(150, 6, false, 9).project(std::vector<std::string>{"x3", "x4", "x5", "y"});
  const auto vine = fit_target_last(data, 3);
  const ConditionalDensity model(vine, response_grid(vine));
  for (std::size_t i = 0; i < 10; ++i) {
    const auto row = data.row(i);
    const auto restricted = model.density(row);
    const auto all = model.density_reference(row, true);
    for (std::size_t g = 0; g < all.size(); ++g) EXPECT_NEAR(restricted[g], all[g], 1e-12 * (1.0 + all[g]));
  }
}

TEST(ConditionalDensityTest, SymmetricDensityPredictsCentre) {
  std::vector<double> x, y;
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const double v = rng.normal();
    x.push_back(rng.normal());
    y.push_back(v);
    x.push_back(rng.normal());
    y.push_back(-v);
  }
  const Dataset data({"x", "y"}, {x, y});
  const auto vine = fit_target_last(data, 1, CopulaFamily::independence);
  const auto grid = response_grid(vine);
  const double step = grid.points[1] - grid.points[0];
  EXPECT_NEAR(predict_mean(vine, std::vector<double>{0.3}, grid), 0.0, step);
  EXPECT_NEAR(ConditionalDensity(vine, grid).predict(std::vector<double>{0.3}, PointPredictor::median), 0.0, step);
}

TEST(PredictMean, RecoversLinearRelation) {
  const auto train = linear_data(1000, 11);
  const auto test = linear_data(200, 12);
  const auto vine = fit_target_last(train);
  const auto predictions = predict(vine, test, response_grid(vine));
  std::vector<double> residual;
  for (std::size_t i = 0; i < test.rows(); ++i) residual.push_back(predictions[i] - 2.0 * test.at(i, 0));
  const double n = static_cast<double>(residual.size());
  const double mean = std::accumulate(residual.begin(), residual.end(), 0.0) / n;
  double var = 0.0;
  for (double r : residual) var += (r - mean) * (r - mean);
  const double se = std::sqrt(var / (n - 1.0) / n);
  EXPECT_LE(std::abs(mean), 3.0 * se);
  EXPECT_LT(nmse(predictions, test.column(1)), 0.2);
}

TEST(Nmse, HandValues) {
  const std::vector<double> truth{1.0, -1.0, 3.0, 5.0};
  EXPECT_EQ(nmse(truth, truth), 0.0);
  const std::vector<double> constant(4, 2.0);
  EXPECT_DOUBLE_EQ(nmse(constant, truth), 1.0);
  EXPECT_DOUBLE_EQ(nmse(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, -1.0}), 1.0);
  try {
    nmse(truth, std::vector<double>(4, 1.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_metric);
  }
  EXPECT_THROW(nmse(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
}

TEST(Evaluate, MatchesItsParts) {
  const auto train = regression_task(300, 6, false, 5);
  const auto test = regression_task(100, 6, false, 6);
  VineFitOptions options;
  options.target_index = 5;
  const auto vine = fit_vine(train, options);
  const auto grid = response_grid(vine, 65);
  // Columns in a different order than the model's.
  std::vector<std::string> shuffled{"y", "x3", "x1", "x5", "x2", "x4"};
  const auto metrics = evaluate(vine, test.project(shuffled), grid);
  EXPECT_DOUBLE_EQ(metrics.nmse, nmse(predict(vine, test, grid), test.column(5)));
  EXPECT_DOUBLE_EQ(metrics.tll, test_log_likelihood(vine, test));
}

TEST(TestLogLikelihood, SingleRowAndSchema) {
  const auto data = regression_task(100, 6, false, 2);
  const auto vine = fit_target_last(data);
  EXPECT_EQ(test_log_likelihood(vine, data.head(1)), log_density(vine, data.row(0)));
  try {
    test_log_likelihood(vine, data.without_column(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema_mismatch);
  }
  VineModel untargeted = vine;
  untargeted.target_index.reset();
  try {
    response_grid(untargeted);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::configuration);
  }
}

TEST(TestLogLikelihood, StandardNormalEntropy) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Dataset train({"x"}, {testing::normal_sample(1000, 2 * seed)});
    const Dataset test({"x"}, {testing::normal_sample(1000, 2 * seed + 1)});
    const double tll = test_log_likelihood(fit_vine(train), test);
    EXPECT_GE(tll, -1.60);
    EXPECT_LE(tll, -1.35);
  }
}

TEST(TestLogLikelihood, VineBeatsProductKernelOnGaussianChain) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto data = gaussian_copula_chain(1000, 8, 0.7, {}, derive_seed(21, seed));
    const auto train = data.head(300);
    std::vector<std::size_t> rest(700);
    std::iota(rest.begin(), rest.end(), 300);
    const auto test = data.select_rows(rest);
    const double vine_tll = test_log_likelihood(fit_vine(train), test);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < train.rows(); ++i) rows.push_back(train.row(i));
    const MultivariateKde kde(rows);
    double kde_tll = 0.0;
    for (std::size_t i = 0; i < test.rows(); ++i) kde_tll += kde.log_pdf(test.row(i));
    kde_tll /= static_cast<double>(test.rows());
    wins += vine_tll > kde_tll;
  }
  EXPECT_GE(wins, 24);
}

}  // namespace
}  // namespace npvine
