#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "npvine/dataset.hpp"
#include "npvine/mmd.hpp"
#include "npvine/vine.hpp"

namespace npvine {

enum class AdaptMode { supervised, semi_supervised, unsupervised };

std::string_view mode_name(AdaptMode mode) noexcept;

/// Accepts "supervised", "semi", "semi_supervised" and "unsupervised".
AdaptMode parse_mode(std::string_view name);

struct AdaptationInput {
  Dataset source;
  Dataset target_labeled;    // all variables; may be empty in unsupervised mode
  Dataset target_unlabeled;  // feature columns; a target column, if present, is ignored
  std::size_t target_index = 0;
  AdaptMode mode = AdaptMode::semi_supervised;
  MmdConfig mmd;
  std::size_t tested_levels = 1;  // trees whose copulas are tested; deeper trees keep the source copulas
};

/// A marginal (level 0, index = variable) or the pair copula at trees[level - 1].edges[index].
struct FactorId {
  std::size_t level = 0;
  std::size_t index = 0;

  static FactorId marginal(std::size_t variable) { return {0, variable}; }
  static FactorId edge(std::size_t level, std::size_t index) { return {level, index}; }
  bool is_marginal() const noexcept { return level == 0; }

  friend bool operator==(const FactorId&, const FactorId&) = default;
};

/// "x3" for a marginal, "x1,x2|x4" for an edge.
std::string factor_label(const VineModel& vine, FactorId id);

enum class RefitSource { target_only, pooled, source_only };

std::string_view refit_name(RefitSource source) noexcept;

struct FactorDecision {
  FactorId factor;
  std::string label;
  bool tested = false;
  double p_value = 1.0;
  bool changed = false;
  RefitSource refit_from = RefitSource::source_only;
  std::size_t target_rows = 0;
  bool fallback = false;  // changed, but too few target rows to refit from the target alone
};

struct AdaptationReport {
  std::vector<FactorDecision> decisions;
  std::size_t n_changed_marginals = 0;
  std::size_t n_changed_copulas = 0;
};

/// Tests every marginal, then the copulas of the first input.tested_levels trees,
/// against the target domain. Changed factors are refit on target rows, unchanged
/// ones on pooled source and target rows. The source tree structure is kept.
/// Factors involving the target variable are copied from the source in
/// unsupervised mode and use labeled rows only otherwise.
std::pair<VineModel, AdaptationReport> adapt_vine(const VineModel& source_vine, const AdaptationInput& input);

/// Comparison sample of one factor: the raw column of a marginal, or the two
/// copula arguments of an edge under the vine's marginals and h-functions.
SampleMatrix factor_samples(const VineModel& vine, const Dataset& data, FactorId id);

}  // namespace npvine
