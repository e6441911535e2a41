#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "npvine/adapt.hpp"
#include "npvine/dataset.hpp"
#include "npvine/mmd.hpp"

namespace npvine {

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t n_samples = 1000;
  double train_fraction = 0.3;
  double target_labeled_fraction = 0.05;
  std::size_t repetitions = 50;
  std::size_t truncation = 1;
  MmdConfig mmd;

  /// Throws Error(configuration) unless fractions lie in (0,1) and repetitions >= 1.
  void validate() const;
};

/// Produces the dataset for one repetition from that repetition's seed.
using DatasetSource = std::function<Dataset(std::uint64_t seed)>;

/// Per-repetition average test log-likelihoods of the three density estimators.
struct DensityScores {
  std::string dataset;
  std::vector<double> nprv;  // kernel-copula vine
  std::vector<double> grv;   // Gaussian-copula vine with the same structure selection
  std::vector<double> kde;   // product-kernel multivariate KDE
};

/// Repeats: draw data, shuffle, train on train_fraction of the rows, score the rest.
DensityScores run_density_bench(const std::string& name, const DatasetSource& source, const ExperimentConfig& config);

/// Methods as rows, datasets as columns, "mean +- sd" cells.
void write_density_table(std::ostream& out, const std::vector<DensityScores>& results);

/// dataset,method,repetition,tll
void write_density_csv(std::ostream& out, const std::vector<DensityScores>& results);

enum class DetectionScenario { marginal_shift, copula_flip };

struct DetectionOutcome {
  std::size_t runs = 0;
  std::size_t exact = 0;    // the constructed factor flagged and nothing else
  std::size_t flagged = 0;  // the constructed factor flagged
  double mean_changed_marginals = 0.0;
  double mean_changed_copulas = 0.0;
};

/// Fits a vine on a source draw, adapts it to an independent target draw
/// (supervised mode) and checks which factors were flagged.
DetectionOutcome run_detection_experiment(DetectionScenario scenario, std::size_t runs, std::size_t n_source,
                                          std::size_t n_target, const MmdConfig& mmd, std::uint64_t seed);

struct RegressionAdaptationRun {
  double source_only = 0.0;
  double supervised = 0.0;
  double semi_supervised = 0.0;
  double unsupervised = 0.0;
  std::size_t changed_marginals = 0;  // semi-supervised report
  std::size_t changed_copulas = 0;
};

/// Shifted regression task: source and target training sets of n_samples rows,
/// target_labeled_fraction of the target rows labeled, and a separate target
/// test set of n_samples rows. Reports test NMSE per model.
std::vector<RegressionAdaptationRun> run_regression_adaptation(std::size_t d, const ExperimentConfig& config);

}  // namespace npvine
