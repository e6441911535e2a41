#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "npvine/bicopula.hpp"
#include "npvine/dataset.hpp"
#include "npvine/kde.hpp"

namespace npvine {

/// One pair copula of the vine, labelled by its conditioned pair C(e), its
/// conditioning set D(e) and its constraint set N(e) = C(e) u D(e).
struct VineEdge {
  std::array<std::size_t, 2> conditioned{};  // ascending; copula arguments are (u_{a|D}, u_{b|D})
  std::vector<std::size_t> conditioning;     // ascending
  std::vector<std::size_t> constraint;       // ascending
  // Endpoints in the edge's own tree: variables in the first tree, edges of
  // the previous tree otherwise. nodes[s] is the endpoint carrying conditioned[s].
  std::array<std::size_t, 2> nodes{};
  PairCopula copula = IndependenceCopula{};
  double tau = 0.0;     // Kendall's tau of the copula arguments at fit time
  double weight = 0.0;  // |tau|, the spanning-tree weight
};

struct VineTree {
  std::size_t level = 1;
  std::size_t node_count = 0;
  std::vector<VineEdge> edges;
};

struct FitMetadata {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t truncation = 1;
  std::string family = "kernel";
  std::string timestamp;  // empty unless supplied by the caller
};

/// Truncated regular vine: d kernel marginals plus trees T_1..T_t. Pair
/// copulas beyond the last stored tree are independence copulas.
struct VineModel {
  std::vector<std::string> variable_names;
  std::vector<GaussianKernel1D> marginals;
  std::vector<VineTree> trees;
  std::optional<std::size_t> target_index;
  FitMetadata metadata;

  std::size_t dimension() const noexcept { return marginals.size(); }
  std::size_t copula_count() const noexcept;
};

/// Copula arguments of one edge over a sample, and the two conditional cdfs
/// the edge hands to the next tree.
struct EdgeSample {
  std::vector<double> u_first;             // u_{a|D}
  std::vector<double> u_second;            // u_{b|D}
  std::vector<double> first_given_second;  // u_{a|D u {b}}
  std::vector<double> second_given_first;  // u_{b|D u {a}}
};

struct VineFitOptions {
  std::size_t truncation = 1;
  CopulaFamily family = CopulaFamily::kernel;
  std::optional<std::size_t> target_index;
  std::uint64_t seed = 0;
  std::string timestamp;
};

inline constexpr std::size_t kMinFitRows = 20;

/// Maximum spanning tree over the complete graph of the variables, weighted by
/// |Kendall's tau| of the pseudo-observation columns. Copulas are left as
/// independence placeholders.
VineTree build_first_tree(const std::vector<std::vector<double>>& pseudo);

/// Next tree from pairs of previous edges that share a node:
/// C(e) = N(e1) ^ N(e2), D(e) = N(e1) n N(e2), weights from the conditional
/// pseudo-observations `previous` (one EdgeSample per edge of `prev`, with the
/// conditional outputs filled).
VineTree build_next_tree(const VineTree& prev, std::span<const EdgeSample> previous);

/// Argument `side` (0 or 1) of `edge` computed from the previous tree's samples.
std::vector<double> edge_argument(const VineTree& prev, std::span<const EdgeSample> previous, const VineEdge& edge,
                                  std::size_t side);

/// Fits marginals, then trees T_1..T_truncation with pair copulas of the chosen family.
/// Throws Error(insufficient_data) below kMinFitRows rows and Error(degenerate_sample)
/// naming a zero-variance column.
VineModel fit_vine(const Dataset& data, const VineFitOptions& options = {});

/// Refits every marginal and pair copula of `structure` on `data`, keeping the tree topology.
VineModel refit_vine(const VineModel& structure, const Dataset& data, CopulaFamily family = CopulaFamily::kernel);

/// Marginal cdf columns of `data` under the vine's marginals.
std::vector<std::vector<double>> marginal_pseudo_observations(const VineModel& vine, const Dataset& data);

/// Edge samples for the first `levels` trees given marginal pseudo-observations.
/// Conditional outputs are filled for every level below the last requested one.
std::vector<std::vector<EdgeSample>> vine_edge_samples(const VineModel& vine,
                                                       const std::vector<std::vector<double>>& pseudo,
                                                       std::size_t levels);

/// P(x_j | x_i : i in conditioning) through the h-function recursion. Only the
/// entries of x named by j and the conditioning set are read. Throws
/// Error(structural) when no edge of the stored trees provides the conditional.
double conditional_cdf(const VineModel& vine, std::size_t j, std::span<const std::size_t> conditioning,
                       std::span<const double> x);

/// Sum of the log pair-copula densities of the stored edges at marginal cdf
/// values u, optionally restricted to edges whose constraint set holds `involving`.
double pair_copula_log_sum(const VineModel& vine, std::span<const double> u,
                           std::optional<std::size_t> involving = std::nullopt);

/// Sum of the marginal log densities plus the log pair-copula densities of every stored edge.
double log_density(const VineModel& vine, std::span<const double> x);

/// Checks every structural invariant; throws Error(structural) on the first violation.
void validate(const VineModel& vine);

}  // namespace npvine
