#include "npvine/experiments.hpp"

#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "npvine/error.hpp"
#include "npvine/generators.hpp"
#include "npvine/kde.hpp"
#include "npvine/parallel.hpp"
#include "npvine/regress.hpp"
#include "npvine/rng.hpp"

namespace npvine {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::vector<std::size_t> range(std::size_t from, std::size_t to) {
  std::vector<std::size_t> out(to - from);
  std::iota(out.begin(), out.end(), from);
  return out;
}

double kde_tll(const Dataset& train, const Dataset& test) {
  std::vector<std::vector<double>> rows;
  rows.reserve(train.rows());
  for (std::size_t i = 0; i < train.rows(); ++i) rows.push_back(train.row(i));
  const MultivariateKde kde(std::move(rows));
  double total = 0.0;
  for (std::size_t i = 0; i < test.rows(); ++i) total += kde.log_pdf(test.row(i));
  return total / static_cast<double>(test.rows());
}

bool is_expected(DetectionScenario scenario, const VineModel& vine, const FactorDecision& d) {
  if (scenario == DetectionScenario::marginal_shift) return d.factor.is_marginal() && d.factor.index == 2;
  if (d.factor.level != 1) return false;
  const auto& edge = vine.trees[0].edges[d.factor.index];
  return edge.conditioned[0] == 0 && edge.conditioned[1] == 1;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail(ErrorKind::configuration, "train fraction must lie in (0,1)");
  if (!(target_labeled_fraction > 0.0 && target_labeled_fraction < 1.0)) {
    fail(ErrorKind::configuration, "labeled fraction must lie in (0,1)");
  }
  if (repetitions < 1) fail(ErrorKind::configuration, "repetitions must be at least 1");
  if (truncation < 1) fail(ErrorKind::configuration, "truncation must be at least 1");
  mmd.validate();
}

DensityScores run_density_bench(const std::string& name, const DatasetSource& source, const ExperimentConfig& config) {
  config.validate();
  DensityScores scores;
  scores.dataset = name;
  scores.nprv.resize(config.repetitions);
  scores.grv.resize(config.repetitions);
  scores.kde.resize(config.repetitions);
  parallel_for(config.repetitions, [&](std::size_t rep) {
    const std::uint64_t seed = derive_seed(config.seed, rep);
    const Dataset data = source(seed);
    Rng rng(derive_seed(seed, 1));
    const auto order = rng.permutation(data.rows());
    const auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(data.rows())));
    const std::span<const std::size_t> all(order);
    const Dataset train = data.select_rows(all.first(n_train));
    const Dataset test = data.select_rows(all.subspan(n_train));
    VineFitOptions options;
    options.truncation = config.truncation;
    options.seed = seed;
    scores.nprv[rep] = test_log_likelihood(fit_vine(train, options), test);
    options.family = CopulaFamily::gaussian;
    scores.grv[rep] = test_log_likelihood(fit_vine(train, options), test);
    scores.kde[rep] = kde_tll(train, test);
  });
  return scores;
}

void write_density_table(std::ostream& out, const std::vector<DensityScores>& results) {
  auto cell = [](const std::vector<double>& v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << mean_of(v) << " +- " << sd_of(v);
    return s.str();
  };
  std::size_t width = 20;
  for (const auto& r : results) width = std::max(width, r.dataset.size() + 2);
  out << std::left << std::setw(8) << "method";
  for (const auto& r : results) out << std::setw(static_cast<int>(width)) << r.dataset;
  out << "\n";
  const std::pair<const char*, std::vector<double> DensityScores::*> methods[] = {
      {"NPRV", &DensityScores::nprv}, {"GRV", &DensityScores::grv}, {"KDE", &DensityScores::kde}};
  for (const auto& [label, member] : methods) {
    out << std::setw(8) << label;
    for (const auto& r : results) out << std::setw(static_cast<int>(width)) << cell(r.*member);
    out << "\n";
  }
}

void write_density_csv(std::ostream& out, const std::vector<DensityScores>& results) {
  out << "dataset,method,repetition,tll\n";
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.nprv.size(); ++i) {
      out << r.dataset << ",NPRV," << i << "," << format_double(r.nprv[i]) << "\n";
      out << r.dataset << ",GRV," << i << "," << format_double(r.grv[i]) << "\n";
      out << r.dataset << ",KDE," << i << "," << format_double(r.kde[i]) << "\n";
    }
  }
}

DetectionOutcome run_detection_experiment(DetectionScenario scenario, std::size_t runs, std::size_t n_source,
                                          std::size_t n_target, const MmdConfig& mmd, std::uint64_t seed) {
  auto draw = [&](std::size_t n, bool target, std::uint64_t s) {
    return scenario == DetectionScenario::marginal_shift ? marginal_shift_task(n, target, s)
                                                         : copula_flip_task(n, target, s);
  };
  std::vector<AdaptationReport> reports(runs);
  std::vector<VineModel> vines(runs);
  parallel_for(runs, [&](std::size_t r) {
    const std::uint64_t run_seed = derive_seed(seed, r);
    const Dataset source = draw(n_source, false, derive_seed(run_seed, 0));
    const Dataset target = draw(n_target, true, derive_seed(run_seed, 1));
    VineFitOptions options;
    options.target_index = source.cols() - 1;
    vines[r] = fit_vine(source, options);
    AdaptationInput input;
    input.source = source;
    input.target_labeled = target;
    input.target_index = source.cols() - 1;
    input.mode = AdaptMode::supervised;
    input.mmd = mmd;
    input.mmd.seed = derive_seed(run_seed, 2);
    reports[r] = adapt_vine(vines[r], input).second;
  });

  DetectionOutcome outcome;
  outcome.runs = runs;
  for (std::size_t r = 0; r < runs; ++r) {
    bool exact = true;
    bool flagged = false;
    for (const auto& d : reports[r].decisions) {
      const bool expected = is_expected(scenario, vines[r], d);
      if (expected && d.changed) flagged = true;
      if (expected != d.changed) exact = false;
    }
    outcome.exact += exact && flagged;
    outcome.flagged += flagged;
    outcome.mean_changed_marginals += static_cast<double>(reports[r].n_changed_marginals) / static_cast<double>(runs);
    outcome.mean_changed_copulas += static_cast<double>(reports[r].n_changed_copulas) / static_cast<double>(runs);
  }
  return outcome;
}

std::vector<RegressionAdaptationRun> run_regression_adaptation(std::size_t d, const ExperimentConfig& config) {
  config.validate();
  std::vector<RegressionAdaptationRun> runs(config.repetitions);
  parallel_for(config.repetitions, [&](std::size_t rep) {
    const std::uint64_t seed = derive_seed(config.seed, rep);
    const std::size_t n = config.n_samples;
    const Dataset source = regression_task(n, d, false, derive_seed(seed, 0));
    const Dataset target = regression_task(n, d, true, derive_seed(seed, 1));
    const Dataset test = regression_task(n, d, true, derive_seed(seed, 2));
    const std::size_t y = d - 1;
    const auto n_labeled = static_cast<std::size_t>(std::llround(config.target_labeled_fraction * static_cast<double>(n)));
    const Dataset labeled = target.select_rows(range(0, n_labeled));
    const Dataset unlabeled = target.select_rows(range(n_labeled, n)).without_column(y);

    VineFitOptions options;
    options.truncation = config.truncation;
    options.target_index = y;
    options.seed = seed;
    const VineModel source_vine = fit_vine(source, options);
    auto score = [&](const VineModel& vine) {
      return nmse(predict(vine, test, response_grid(vine)), test.column(y));
    };

    AdaptationInput input;
    input.source = source;
    input.target_index = y;
    input.mmd = config.mmd;
    input.mmd.seed = derive_seed(seed, 3);
    input.tested_levels = config.truncation;

    RegressionAdaptationRun run;
    run.source_only = score(source_vine);

    input.mode = AdaptMode::supervised;
    input.target_labeled = labeled;
    run.supervised = score(adapt_vine(source_vine, input).first);

    input.mode = AdaptMode::semi_supervised;
    input.target_unlabeled = unlabeled;
    const auto [semi, report] = adapt_vine(source_vine, input);
    run.semi_supervised = score(semi);
    run.changed_marginals = report.n_changed_marginals;
    run.changed_copulas = report.n_changed_copulas;

    input.mode = AdaptMode::unsupervised;
    input.target_labeled = Dataset{};
    input.target_unlabeled = target.without_column(y);
    run.unsupervised = score(adapt_vine(source_vine, input).first);
    runs[rep] = run;
  });
  return runs;
}

}  // namespace npvine
