#include <gtest/gtest.h>

#include <sstream>

#include "npvine/error.hpp"
#include "npvine/experiments.hpp"
#include "npvine/generators.hpp"

namespace npvine {
namespace {

ExperimentConfig small_config(std::size_t repetitions) {
  ExperimentConfig config;
  config.seed = 5;
  config.repetitions = repetitions;
  return config;
}

TEST(ExperimentConfig, Validation) {
  EXPECT_NO_THROW(ExperimentConfig{}.validate());
  auto bad = [](auto edit) {
    ExperimentConfig config;
    edit(config);
    try {
      config.validate();
    } catch (const Error& e) {
      return e.kind() == ErrorKind::configuration;
    }
    return false;
  };
  EXPECT_TRUE(bad([](ExperimentConfig& c) { c.train_fraction = 1.0; }));
  EXPECT_TRUE(bad([](ExperimentConfig& c) { c.train_fraction = 0.0; }));
  EXPECT_TRUE(bad([](ExperimentConfig& c) { c.target_labeled_fraction = -0.1; }));
  EXPECT_TRUE(bad([](ExperimentConfig& c) { c.repetitions = 0; }));
  EXPECT_TRUE(bad([](ExperimentConfig& c) { c.mmd.alpha = 1.5; }));
}

TEST(DensityBench, DeterministicAndFormatted) {
  const auto source = [](std::uint64_t seed) { return bimodal_chain(150, 3, seed); };
  const auto first = run_density_bench("bimodal", source, small_config(4));
  const auto second = run_density_bench("bimodal", source, small_config(4));
  EXPECT_EQ(first.nprv, second.nprv);
  EXPECT_EQ(first.grv, second.grv);
  EXPECT_EQ(first.kde, second.kde);
  ASSERT_EQ(first.nprv.size(), 4u);

  std::ostringstream table;
  write_density_table(table, {first, first});
  std::istringstream lines(table.str());
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(lines, line)) rows.push_back(line);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[1].substr(0, 4), "NPRV");
  EXPECT_NE(rows[1].find("+-"), std::string::npos);

  std::ostringstream csv;
  write_density_csv(csv, {first});
  EXPECT_EQ(csv.str().substr(0, 30), "dataset,method,repetition,tll\n");
}

// With the copula exactly Gaussian and only 150 training rows, the parametric
// vine should win most of the time.
TEST(DensityBench, GaussianVineWinsOnSmallGaussianSamples) {
  ExperimentConfig config = small_config(30);
  config.n_samples = 500;
  const auto scores = run_density_bench(
      "gaussian", [](std::uint64_t seed) { return gaussian_copula_chain(500, 4, 0.7, {}, seed); }, config);
  int wins = 0;
  for (std::size_t r = 0; r < scores.grv.size(); ++r) wins += scores.grv[r] >= scores.nprv[r];
  EXPECT_GE(wins, 18);
}

TEST(RegressionAdaptation, AdaptedModelsImprove) {
  ExperimentConfig config = small_config(2);
  config.n_samples = 400;
  const auto runs = run_regression_adaptation(8, config);
  ASSERT_EQ(runs.size(), 2u);
  for (const auto& r : runs) {
    EXPECT_LT(r.semi_supervised, r.source_only);
    EXPECT_GE(r.changed_marginals, 1u);
  }
}

}  // namespace
}  // namespace npvine
