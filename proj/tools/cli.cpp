#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "npvine/adapt.hpp"
#include "npvine/dataset.hpp"
#include "npvine/error.hpp"
#include "npvine/experiments.hpp"
#include "npvine/generators.hpp"
#include "npvine/mmd.hpp"
#include "npvine/model_io.hpp"
#include "npvine/regress.hpp"
#include "npvine/vine.hpp"

namespace npvine::cli {

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse:
    case ErrorKind::configuration: return parse_error;
    case ErrorKind::degenerate_sample:
    case ErrorKind::insufficient_data:
    case ErrorKind::degenerate_metric: return degenerate_data;
    case ErrorKind::schema_mismatch: return schema_mismatch;
    case ErrorKind::structural:
    case ErrorKind::domain: return internal_error;
  }
  return internal_error;
}

std::size_t target_position(const Dataset& data, const std::string& name) {
  if (name.empty()) return data.cols() - 1;
  const auto index = data.index_of(name);
  if (!index) fail(ErrorKind::schema_mismatch, "target column '" + name + "' not found");
  return *index;
}

const std::string& response_name(const VineModel& vine) {
  if (!vine.target_index) fail(ErrorKind::configuration, "model has no target variable");
  return vine.variable_names[*vine.target_index];
}

// Keeps the model's columns that `data` has and standardizes them if the model was fitted on z-scores.
Dataset prepare(const Dataset& data, const ModelFile& file) {
  std::vector<std::string> known;
  for (const auto& name : file.vine.variable_names) {
    if (data.index_of(name)) known.push_back(name);
  }
  const Dataset projected = data.project(known);
  return file.standardizer ? file.standardizer->apply(projected) : projected;
}

// The kernel marginals keep their training points in row order, so a freshly
// fitted model carries its own training table.
Dataset training_rows(const VineModel& vine) {
  std::vector<std::vector<double>> columns;
  for (const auto& marginal : vine.marginals) columns.push_back(marginal.centers());
  for (const auto& column : columns) {
    if (column.size() != columns.front().size()) {
      fail(ErrorKind::configuration, "model marginals differ in size; pass the source table with --source");
    }
  }
  return Dataset(vine.variable_names, std::move(columns));
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(ErrorKind::configuration, "cannot write '" + path + "'");
  file << text;
}

std::string csv_text(const Dataset& data) {
  std::ostringstream text;
  write_csv(text, data);
  return text.str();
}

struct FitArgs {
  std::string input;
  std::string output = "model.json";
  std::string target;
  std::size_t truncation = 1;
  std::string family = "kernel";
  std::uint64_t seed = 0;
  bool normalize = false;
};

int cmd_fit(const FitArgs& a, std::ostream& out) {
  const Dataset raw = read_csv_file(a.input);
  ModelFile file;
  if (a.normalize) file.standardizer = Standardizer::fit(raw);
  const Dataset data = file.standardizer ? file.standardizer->apply(raw) : raw;

  VineFitOptions options;
  options.truncation = a.truncation;
  options.family = parse_family(a.family);
  options.target_index = target_position(data, a.target);
  options.seed = a.seed;

  const auto start = std::chrono::steady_clock::now();
  file.vine = fit_vine(data, options);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_model(file, a.output);

  const VineModel& vine = file.vine;
  out << "d " << vine.dimension() << "\nn " << data.rows() << "\ntruncation " << vine.trees.size() << '\n';
  for (std::size_t t = 0; t < vine.trees.size(); ++t) {
    for (std::size_t e = 0; e < vine.trees[t].edges.size(); ++e) {
      out << "edge " << factor_label(vine, FactorId::edge(t + 1, e)) << " |tau| "
          << format_double(vine.trees[t].edges[e].weight) << '\n';
    }
  }
  out << "fit_seconds " << std::fixed << std::setprecision(4) << seconds << std::defaultfloat << '\n';
  return ok;
}

struct GenArgs {
  GeneratorRequest request;
  std::string marginals;
  std::string output;
};

int cmd_gen(GenArgs a, std::ostream& out) {
  if (!a.marginals.empty()) {
    std::stringstream list(a.marginals);
    for (std::string item; std::getline(list, item, ',');) a.request.marginals.push_back(parse_marginal(item));
  }
  write_output(a.output, csv_text(make_dataset(a.request)), out);
  return ok;
}

struct BenchArgs {
  std::vector<std::string> inputs;
  ExperimentConfig config;
  std::size_t d = 8;
  std::string csv;
};

int cmd_density_bench(BenchArgs a, std::ostream& out) {
  a.config.validate();
  std::vector<DensityScores> results;
  if (a.inputs.empty()) {
    const std::size_t n = a.config.n_samples;
    const std::size_t d = a.d;
    results.push_back(run_density_bench(
        "bimodal-chain", [n, d](std::uint64_t seed) { return bimodal_chain(n, d, seed); }, a.config));
    results.push_back(run_density_bench(
        "gaussian-chain", [n, d](std::uint64_t seed) { return gaussian_copula_chain(n, d, 0.6, {}, seed); },
        a.config));
  } else {
    for (const auto& path : a.inputs) {
      Dataset data = read_csv_file(path);
      results.push_back(run_density_bench(path, [data](std::uint64_t) { return data; }, a.config));
    }
  }
  write_density_table(out, results);
  if (!a.csv.empty()) {
    std::ostringstream text;
    write_density_csv(text, results);
    write_output(a.csv, text.str(), out);
  }
  return ok;
}

struct AdaptArgs {
  std::string model;
  std::string source;
  std::string labeled;
  std::string unlabeled;
  std::string mode = "semi";
  std::string output = "adapted.json";
  std::string report;
  std::size_t tested_levels = 1;
  MmdConfig mmd;
};

nlohmann::ordered_json report_json(const AdaptationReport& report, AdaptMode mode) {
  nlohmann::ordered_json j;
  j["mode"] = std::string(mode_name(mode));
  j["changed_marginals"] = report.n_changed_marginals;
  j["changed_copulas"] = report.n_changed_copulas;
  j["factors"] = nlohmann::ordered_json::array();
  for (const auto& d : report.decisions) {
    nlohmann::ordered_json f;
    f["factor"] = d.label;
    f["level"] = d.factor.level;
    f["tested"] = d.tested;
    f["p_value"] = d.p_value;
    f["changed"] = d.changed;
    f["refit_from"] = std::string(refit_name(d.refit_from));
    f["target_rows"] = d.target_rows;
    f["fallback"] = d.fallback;
    j["factors"].push_back(f);
  }
  return j;
}

int cmd_adapt(const AdaptArgs& a, std::ostream& out) {
  a.mmd.validate();
  const ModelFile file = load_model_file(a.model);
  const VineModel& vine = file.vine;

  AdaptationInput input;
  input.mode = parse_mode(a.mode);
  input.mmd = a.mmd;
  input.tested_levels = a.tested_levels;
  response_name(vine);
  input.target_index = *vine.target_index;
  input.source = a.source.empty() ? training_rows(vine) : prepare(read_csv_file(a.source), file).project(vine.variable_names);
  if (!a.labeled.empty()) input.target_labeled = prepare(read_csv_file(a.labeled), file).project(vine.variable_names);
  if (!a.unlabeled.empty()) input.target_unlabeled = prepare(read_csv_file(a.unlabeled), file);

  auto [adapted, report] = adapt_vine(vine, input);
  save_model(ModelFile{std::move(adapted), file.standardizer}, a.output);

  for (const auto& d : report.decisions) {
    out << std::left << std::setw(16) << d.label << ' ' << (d.tested ? format_double(d.p_value) : "untested") << ' '
        << (d.changed ? "changed" : "kept") << ' ' << refit_name(d.refit_from) << (d.fallback ? " fallback" : "")
        << '\n';
  }
  out << "changed_marginals " << report.n_changed_marginals << "\nchanged_copulas " << report.n_changed_copulas
      << '\n';
  if (!a.report.empty()) write_output(a.report, report_json(report, input.mode).dump(2) + "\n", out);
  return ok;
}

struct PredictArgs {
  std::string model;
  std::string input;
  std::string output;
  std::size_t grid_points = kDefaultGridPoints;
  bool median = false;
  bool log_density = false;
};

// Linear interpolation of a density tabulated on `grid`; zero outside.
double interpolate(const std::vector<double>& grid, const std::vector<double>& values, double y) {
  if (y < grid.front() || y > grid.back()) return 0.0;
  const auto hi = static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), y) - grid.begin());
  if (hi >= grid.size()) return values.back();
  const std::size_t lo = hi - 1;
  const double w = (y - grid[lo]) / (grid[hi] - grid[lo]);
  return (1.0 - w) * values[lo] + w * values[hi];
}

int cmd_predict(const PredictArgs& a, std::ostream& out) {
  if (a.grid_points < kMinGridPoints) {
    fail(ErrorKind::configuration, "--grid-points must be at least " + std::to_string(kMinGridPoints));
  }
  const ModelFile file = load_model_file(a.model);
  const VineModel& vine = file.vine;
  const std::string& y_name = response_name(vine);
  const Dataset data = prepare(read_csv_file(a.input), file);

  const ConditionalDensity model(vine, response_grid(vine, a.grid_points));
  const std::size_t y = *vine.target_index;
  std::vector<std::string> features = vine.variable_names;
  features.erase(features.begin() + static_cast<std::ptrdiff_t>(y));
  const Dataset x = data.project(features);
  const auto truth = data.index_of(y_name);
  if (a.log_density && !truth) fail(ErrorKind::schema_mismatch, "--log-density needs the '" + y_name + "' column");

  const double y_scale = file.standardizer ? std::log(file.standardizer->restore(y_name, 1.0) -
                                                       file.standardizer->restore(y_name, 0.0))
                                           : 0.0;
  std::vector<double> predicted(x.rows());
  std::vector<double> log_density(a.log_density ? x.rows() : 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    const double value = model.predict(row, a.median ? PointPredictor::median : PointPredictor::mean);
    predicted[i] = file.standardizer ? file.standardizer->restore(y_name, value) : value;
    if (a.log_density) {
      const auto density = model.density(row);
      log_density[i] = std::log(interpolate(model.grid().points, density, data.at(i, *truth))) - y_scale;
    }
  }
  Dataset result({"prediction"}, {predicted});
  if (a.log_density) result = result.with_column(1, "log_density", log_density);
  write_output(a.output, csv_text(result), out);
  return ok;
}

struct EvalArgs {
  std::string model;
  std::string input;
  std::size_t grid_points = kDefaultGridPoints;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  if (a.grid_points < kMinGridPoints) {
    fail(ErrorKind::configuration, "--grid-points must be at least " + std::to_string(kMinGridPoints));
  }
  const ModelFile file = load_model_file(a.model);
  const Dataset data = prepare(read_csv_file(a.input), file);
  RegressionMetrics metrics = evaluate(file.vine, data, response_grid(file.vine, a.grid_points));
  // Report the log-likelihood in the units of the input table.
  if (file.standardizer) {
    for (const double sd : file.standardizer->sd) metrics.tll -= std::log(sd);
  }
  out << "nmse " << format_double(metrics.nmse) << "\ntll " << format_double(metrics.tll) << '\n';
  return ok;
}

struct MmdArgs {
  std::string first;
  std::string second;
  MmdConfig config;
  double bandwidth = 0.0;
};

int cmd_mmd_test(MmdArgs a, std::ostream& out) {
  if (a.bandwidth > 0.0) a.config.kernel_bandwidth = a.bandwidth;
  a.config.validate();
  const Dataset x = read_csv_file(a.first);
  const Dataset y = read_csv_file(a.second);
  if (x.names() != y.names()) fail(ErrorKind::schema_mismatch, "mmd-test: the two files have different columns");
  auto matrix = [](const Dataset& data) {
    return SampleMatrix::from_columns(std::vector<std::span<const double>>(data.columns().begin(), data.columns().end()));
  };
  const TestResult result = permutation_test(matrix(x), matrix(y), a.config);
  out << "statistic " << format_double(result.statistic) << "\np_value " << format_double(result.p_value)
      << "\nbandwidth " << format_double(result.bandwidth) << "\nverdict " << (result.rejected ? "reject" : "accept")
      << '\n';
  return result.rejected ? reject : ok;
}

void add_mmd_options(CLI::App* cmd, MmdConfig& config) {
  cmd->add_option("--alpha", config.alpha, "Test level")->capture_default_str();
  cmd->add_option("--permutations", config.permutations, "Permutation draws (>= 50)")->capture_default_str();
  cmd->add_option("--seed", config.seed, "Permutation seed")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Non-parametric vine copula density estimation and domain adaptation", "npvine"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a vine to a CSV table and write a model file");
  fit_cmd->add_option("input", fit.input, "Training CSV")->required();
  fit_cmd->add_option("-o,--output", fit.output, "Model file")->capture_default_str();
  fit_cmd->add_option("--target", fit.target, "Response column (default: last)");
  fit_cmd->add_option("--truncation", fit.truncation, "Number of vine trees")->capture_default_str();
  fit_cmd->add_option("--family", fit.family, "kernel, gaussian or independence")->capture_default_str();
  fit_cmd->add_option("--seed", fit.seed, "Seed recorded in the model")->capture_default_str();
  fit_cmd->add_flag("--normalize", fit.normalize, "Z-score columns with training statistics");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic dataset as CSV");
  std::string generators;
  for (const auto& name : generator_names()) generators += (generators.empty() ? "" : ", ") + name;
  gen_cmd->add_option("generator", gen.request.name, generators)->required();
  gen_cmd->add_option("--n", gen.request.n, "Rows")->capture_default_str();
  gen_cmd->add_option("--d", gen.request.d, "Columns")->capture_default_str();
  gen_cmd->add_option("--rho", gen.request.rho, "Chain correlation")->capture_default_str();
  gen_cmd->add_option("--marginals", gen.marginals, "Comma-separated marginal laws");
  gen_cmd->add_flag("--target-domain", gen.request.target, "Draw from the shifted domain");
  gen_cmd->add_option("--noise", gen.request.noise, "Response noise sd")->capture_default_str();
  gen_cmd->add_option("--seed", gen.request.seed, "Seed")->capture_default_str();
  gen_cmd->add_option("-o,--output", gen.output, "Output CSV (default: stdout)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("density-bench", "Compare NPRV, GRV and KDE test log-likelihoods");
  bench_cmd->add_option("inputs", bench.inputs, "CSV tables (default: synthetic chains)");
  bench_cmd->add_option("--repetitions", bench.config.repetitions, "Random splits")->capture_default_str();
  bench_cmd->add_option("--n", bench.config.n_samples, "Rows per synthetic draw")->capture_default_str();
  bench_cmd->add_option("--d", bench.d, "Columns of the synthetic sets")->capture_default_str();
  bench_cmd->add_option("--train-fraction", bench.config.train_fraction, "Training share")->capture_default_str();
  bench_cmd->add_option("--truncation", bench.config.truncation, "Number of vine trees")->capture_default_str();
  bench_cmd->add_option("--seed", bench.config.seed, "Master seed")->capture_default_str();
  bench_cmd->add_option("--csv", bench.csv, "Per-repetition results CSV");

  AdaptArgs adapt;
  auto* adapt_cmd = app.add_subcommand("adapt", "Adapt a fitted model to a target domain");
  adapt_cmd->add_option("--model", adapt.model, "Source model file")->required();
  adapt_cmd->add_option("--source", adapt.source, "Source training CSV (default: rebuilt from the model)");
  adapt_cmd->add_option("--labeled", adapt.labeled, "Labeled target CSV");
  adapt_cmd->add_option("--unlabeled", adapt.unlabeled, "Unlabeled target CSV (response column optional)");
  adapt_cmd->add_option("--mode", adapt.mode, "supervised, semi or unsupervised")
      ->check(CLI::IsMember({"supervised", "semi", "semi-supervised", "unsupervised"}))
      ->capture_default_str();
  adapt_cmd->add_option("--tested-levels", adapt.tested_levels, "Trees whose copulas are tested")
      ->capture_default_str();
  adapt_cmd->add_option("-o,--output", adapt.output, "Adapted model file")->capture_default_str();
  adapt_cmd->add_option("--report", adapt.report, "Adaptation report JSON");
  add_mmd_options(adapt_cmd, adapt.mmd);

  PredictArgs predict;
  auto* predict_cmd = app.add_subcommand("predict", "Predict the response for each row of a CSV");
  predict_cmd->add_option("model", predict.model, "Model file")->required();
  predict_cmd->add_option("input", predict.input, "Feature CSV")->required();
  predict_cmd->add_option("-o,--output", predict.output, "Predictions CSV (default: stdout)");
  predict_cmd->add_option("--grid-points", predict.grid_points, "Response grid size")->capture_default_str();
  predict_cmd->add_flag("--median", predict.median, "Conditional median instead of mean");
  predict_cmd->add_flag("--log-density", predict.log_density, "Also write the conditional log-density of the response");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Print test NMSE and log-likelihood");
  eval_cmd->add_option("model", eval.model, "Model file")->required();
  eval_cmd->add_option("input", eval.input, "Test CSV with the response column")->required();
  eval_cmd->add_option("--grid-points", eval.grid_points, "Response grid size")->capture_default_str();

  MmdArgs mmd;
  auto* mmd_cmd = app.add_subcommand("mmd-test", "Two-sample MMD permutation test (exit 1 on reject)");
  mmd_cmd->add_option("first", mmd.first, "CSV")->required();
  mmd_cmd->add_option("second", mmd.second, "CSV with the same columns")->required();
  mmd_cmd->add_option("--bandwidth", mmd.bandwidth, "RBF bandwidth (default: median heuristic)");
  add_mmd_options(mmd_cmd, mmd.config);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return ok;
    }
    err << "error: " << e.what() << "\nrun with --help for usage\n";
    return parse_error;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, out);
    if (gen_cmd->parsed()) return cmd_gen(gen, out);
    if (bench_cmd->parsed()) return cmd_density_bench(bench, out);
    if (adapt_cmd->parsed()) return cmd_adapt(adapt, out);
    if (predict_cmd->parsed()) return cmd_predict(predict, out);
    if (eval_cmd->parsed()) return cmd_eval(eval, out);
    if (mmd_cmd->parsed()) return cmd_mmd_test(mmd, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return internal_error;
  }
  return internal_error;
}

}  // namespace npvine::cli
