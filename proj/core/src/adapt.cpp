#include "npvine/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "npvine/error.hpp"
#include "npvine/kendall.hpp"
#include "npvine/parallel.hpp"
#include "npvine/rng.hpp"

namespace npvine {

namespace {

constexpr std::size_t kMinTestRows = 5;

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

bool involves(const VineEdge& edge, std::size_t variable) {
  return std::binary_search(edge.constraint.begin(), edge.constraint.end(), variable);
}

// Rows of every target domain in the vine's column order. Columns a factor may
// not read are filled with zeros so the vine's cdf recursion stays finite.
struct TargetRows {
  Dataset features;  // rows usable for factors not involving the target variable
  Dataset labeled;   // rows usable for factors involving it
};

Dataset with_placeholder(const Dataset& data, const std::vector<std::string>& names, std::size_t y) {
  std::vector<std::string> feature_names = names;
  feature_names.erase(feature_names.begin() + static_cast<std::ptrdiff_t>(y));
  const Dataset projected = data.project(feature_names);
  return projected.with_column(y, names[y], std::vector<double>(projected.rows(), 0.0));
}

Dataset empty_like(const std::vector<std::string>& names) {
  return Dataset(names, std::vector<std::vector<double>>(names.size()));
}

TargetRows target_rows(const AdaptationInput& input, const std::vector<std::string>& names) {
  const std::size_t y = input.target_index;
  TargetRows rows{empty_like(names), empty_like(names)};
  const bool has_labeled = input.target_labeled.rows() > 0;
  const bool has_unlabeled = input.target_unlabeled.rows() > 0;
  if (input.mode == AdaptMode::unsupervised) {
    if (has_labeled) rows.features = with_placeholder(input.target_labeled, names, y);
  } else {
    if (!has_labeled) fail(ErrorKind::configuration, "supervised and semi-supervised adaptation need labeled target rows");
    rows.labeled = input.target_labeled.project(names);
    rows.features = rows.labeled;
  }
  if (input.mode != AdaptMode::supervised && has_unlabeled) {
    rows.features = rows.features.concat(with_placeholder(input.target_unlabeled, names, y));
  }
  return rows;
}

struct FactorFit {
  FactorDecision decision;
  std::optional<GaussianKernel1D> target_marginal;
  std::optional<GaussianKernel1D> source_marginal;
  PairCopula target_copula = IndependenceCopula{};
  PairCopula source_copula = IndependenceCopula{};
  double target_tau = 0.0;
  double source_tau = 0.0;
};

// Runs the test for one factor and fills decision.p_value/changed/refit_from.
void decide(FactorDecision& decision, const SampleMatrix& source, const SampleMatrix& target, const MmdConfig& mmd) {
  decision.target_rows = target.rows();
  if (target.rows() < kMinTestRows) {
    decision.refit_from = RefitSource::pooled;
    return;
  }
  MmdConfig config = mmd;
  config.seed = derive_seed(mmd.seed, stable_hash(decision.label));
  const TestResult result = permutation_test(source, target, config);
  decision.tested = true;
  decision.p_value = result.p_value;
  decision.changed = result.rejected;
  if (!decision.changed) {
    decision.refit_from = RefitSource::pooled;
  } else if (target.rows() >= kMinFitRows) {
    decision.refit_from = RefitSource::target_only;
  } else {
    decision.refit_from = RefitSource::pooled;
    decision.fallback = true;
  }
}

SampleMatrix pair_matrix(const EdgeSample& s) { return SampleMatrix::from_columns({s.u_first, s.u_second}); }

}  // namespace

std::string_view mode_name(AdaptMode mode) noexcept {
  switch (mode) {
    case AdaptMode::supervised: return "supervised";
    case AdaptMode::semi_supervised: return "semi_supervised";
    case AdaptMode::unsupervised: return "unsupervised";
  }
  return "supervised";
}

AdaptMode parse_mode(std::string_view name) {
  if (name == "supervised") return AdaptMode::supervised;
  if (name == "semi" || name == "semi_supervised" || name == "semi-supervised") return AdaptMode::semi_supervised;
  if (name == "unsupervised") return AdaptMode::unsupervised;
  fail(ErrorKind::configuration, "unknown adaptation mode '" + std::string(name) + "'");
}

std::string_view refit_name(RefitSource source) noexcept {
  switch (source) {
    case RefitSource::target_only: return "target_only";
    case RefitSource::pooled: return "pooled";
    case RefitSource::source_only: return "source_only";
  }
  return "source_only";
}

std::string factor_label(const VineModel& vine, FactorId id) {
  const auto& names = vine.variable_names;
  if (id.is_marginal()) return names.at(id.index);
  const VineEdge& edge = vine.trees.at(id.level - 1).edges.at(id.index);
  std::string label = names[edge.conditioned[0]] + "," + names[edge.conditioned[1]];
  for (std::size_t k = 0; k < edge.conditioning.size(); ++k) {
    label += (k == 0 ? "|" : ",") + names[edge.conditioning[k]];
  }
  return label;
}

SampleMatrix factor_samples(const VineModel& vine, const Dataset& data, FactorId id) {
  const bool known = id.is_marginal() ? id.index < vine.dimension()
                                      : id.level <= vine.trees.size() && id.index < vine.trees[id.level - 1].edges.size();
  if (!known) fail(ErrorKind::domain, "factor not present in the vine");
  const Dataset ordered = data.project(vine.variable_names);
  if (id.is_marginal()) return SampleMatrix::from_column(ordered.column(id.index));
  const auto pseudo = marginal_pseudo_observations(vine, ordered);
  return pair_matrix(vine_edge_samples(vine, pseudo, id.level)[id.level - 1][id.index]);
}

std::pair<VineModel, AdaptationReport> adapt_vine(const VineModel& source_vine, const AdaptationInput& input) {
  input.mmd.validate();
  const std::size_t d = source_vine.dimension();
  const std::size_t y = input.target_index;
  if (y >= d) fail(ErrorKind::configuration, "target index out of range");
  const auto& names = source_vine.variable_names;
  const Dataset source = input.source.project(names);
  const TargetRows target = target_rows(input, names);
  const bool copy_y = input.mode == AdaptMode::unsupervised;
  const CopulaFamily family = parse_family(source_vine.metadata.family);

  // The source view holds each factor as seen by the source domain after
  // adaptation (original when changed, pooled otherwise); the adapted model is
  // the target view.
  VineModel source_view = source_vine;
  VineModel adapted = source_vine;
  adapted.target_index = y;
  adapted.metadata.n = source.rows() + target.features.rows();
  AdaptationReport report;

  std::vector<FactorFit> marginals(d);
  parallel_for(d, [&](std::size_t i) {
    FactorFit& fit = marginals[i];
    fit.decision.factor = FactorId::marginal(i);
    fit.decision.label = factor_label(source_vine, fit.decision.factor);
    fit.target_marginal = fit.source_marginal = source_vine.marginals[i];
    if (i == y && copy_y) return;
    const Dataset& rows = i == y ? target.labeled : target.features;
    decide(fit.decision, SampleMatrix::from_column(source.column(i)), SampleMatrix::from_column(rows.column(i)),
           input.mmd);
    if (fit.decision.refit_from == RefitSource::target_only) {
      fit.target_marginal = GaussianKernel1D::fit(rows.column(i));
    } else {
      fit.target_marginal = fit.source_marginal = GaussianKernel1D::fit(concat(source.column(i), rows.column(i)));
    }
  });
  for (std::size_t i = 0; i < d; ++i) {
    adapted.marginals[i] = *marginals[i].target_marginal;
    source_view.marginals[i] = *marginals[i].source_marginal;
    report.decisions.push_back(marginals[i].decision);
  }

  const std::size_t tested = std::min(input.tested_levels, source_vine.trees.size());
  const auto source_pseudo = marginal_pseudo_observations(source_view, source);
  const auto feature_pseudo = marginal_pseudo_observations(adapted, target.features);
  const auto labeled_pseudo = marginal_pseudo_observations(adapted, target.labeled);
  for (std::size_t level = 1; level <= source_vine.trees.size(); ++level) {
    const auto& edges = source_vine.trees[level - 1].edges;
    std::vector<FactorFit> fits(edges.size());
    for (std::size_t k = 0; k < edges.size(); ++k) {
      fits[k].decision.factor = FactorId::edge(level, k);
      fits[k].decision.label = factor_label(source_vine, fits[k].decision.factor);
      fits[k].source_copula = fits[k].target_copula = edges[k].copula;
      fits[k].source_tau = fits[k].target_tau = edges[k].tau;
    }
    if (level <= tested) {
      const auto source_samples = vine_edge_samples(source_view, source_pseudo, level).back();
      std::vector<EdgeSample> feature_samples(edges.size()), labeled_samples(edges.size());
      if (target.features.rows() > 0) feature_samples = vine_edge_samples(adapted, feature_pseudo, level).back();
      if (target.labeled.rows() > 0) labeled_samples = vine_edge_samples(adapted, labeled_pseudo, level).back();
      parallel_for(edges.size(), [&](std::size_t k) {
        FactorFit& fit = fits[k];
        const bool with_y = involves(edges[k], y);
        if (with_y && copy_y) return;
        const EdgeSample& src = source_samples[k];
        const EdgeSample& tgt = with_y ? labeled_samples[k] : feature_samples[k];
        decide(fit.decision, pair_matrix(src), pair_matrix(tgt), input.mmd);
        if (fit.decision.refit_from == RefitSource::target_only) {
          fit.target_copula = fit_pair_copula(family, tgt.u_first, tgt.u_second);
          fit.target_tau = kendall_tau(tgt.u_first, tgt.u_second);
        } else {
          const auto u = concat(src.u_first, tgt.u_first);
          const auto v = concat(src.u_second, tgt.u_second);
          fit.target_copula = fit.source_copula = fit_pair_copula(family, u, v);
          fit.target_tau = fit.source_tau = kendall_tau(u, v);
        }
      });
    }
    for (std::size_t k = 0; k < edges.size(); ++k) {
      adapted.trees[level - 1].edges[k].copula = fits[k].target_copula;
      adapted.trees[level - 1].edges[k].tau = fits[k].target_tau;
      adapted.trees[level - 1].edges[k].weight = std::abs(fits[k].target_tau);
      source_view.trees[level - 1].edges[k].copula = fits[k].source_copula;
      report.decisions.push_back(fits[k].decision);
    }
  }

  for (const auto& decision : report.decisions) {
    if (!decision.changed) continue;
    (decision.factor.is_marginal() ? report.n_changed_marginals : report.n_changed_copulas) += 1;
  }
  return {std::move(adapted), std::move(report)};
}

}  // namespace npvine
