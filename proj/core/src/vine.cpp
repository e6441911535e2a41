#include "npvine/vine.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>

#include "npvine/error.hpp"
#include "npvine/kendall.hpp"
#include "npvine/parallel.hpp"
#include "npvine/spanning_tree.hpp"

namespace npvine {

namespace {

using Set = std::vector<std::size_t>;

Set set_union(const Set& a, const Set& b) {
  Set out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Set set_intersection(const Set& a, const Set& b) {
  Set out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Set set_difference(const Set& a, const Set& b) {
  Set out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool share_node(const VineEdge& e1, const VineEdge& e2) {
  return e1.nodes[0] == e2.nodes[0] || e1.nodes[0] == e2.nodes[1] || e1.nodes[1] == e2.nodes[0] ||
         e1.nodes[1] == e2.nodes[1];
}

// Conditioned pair and node order of the edge joining previous edges i and j.
VineEdge join_edges(const VineTree& prev, std::size_t i, std::size_t j) {
  const VineEdge& e1 = prev.edges[i];
  const VineEdge& e2 = prev.edges[j];
  const Set only1 = set_difference(e1.constraint, e2.constraint);
  const Set only2 = set_difference(e2.constraint, e1.constraint);
  if (only1.size() != 1 || only2.size() != 1) {
    fail(ErrorKind::structural, "joined edges must differ in exactly one variable each");
  }
  VineEdge edge;
  edge.conditioning = set_intersection(e1.constraint, e2.constraint);
  edge.constraint = set_union(e1.constraint, e2.constraint);
  if (only1[0] < only2[0]) {
    edge.conditioned = {only1[0], only2[0]};
    edge.nodes = {i, j};
  } else {
    edge.conditioned = {only2[0], only1[0]};
    edge.nodes = {j, i};
  }
  return edge;
}

// Conditional cdf that edge `parent` passes on for `variable` (one of its conditioned pair).
const std::vector<double>& passed_value(const VineEdge& parent, const EdgeSample& sample, std::size_t variable) {
  return variable == parent.conditioned[0] ? sample.first_given_second : sample.second_given_first;
}

double passed_value(const VineEdge& parent, const std::array<double, 2>& outputs, std::size_t variable) {
  return variable == parent.conditioned[0] ? outputs[0] : outputs[1];
}

void fill_outputs(const VineEdge& edge, EdgeSample& sample) {
  const std::size_t n = sample.u_first.size();
  sample.first_given_second.resize(n);
  sample.second_given_first.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sample.first_given_second[i] = h_given_second(edge.copula, sample.u_first[i], sample.u_second[i]);
    sample.second_given_first[i] = h_given_first(edge.copula, sample.u_first[i], sample.u_second[i]);
  }
}

EdgeSample edge_inputs(const VineEdge& edge, const VineTree* prev, std::span<const EdgeSample> previous,
                       const std::vector<std::vector<double>>& pseudo) {
  EdgeSample sample;
  if (prev == nullptr) {
    sample.u_first = pseudo[edge.conditioned[0]];
    sample.u_second = pseudo[edge.conditioned[1]];
  } else {
    sample.u_first = edge_argument(*prev, previous, edge, 0);
    sample.u_second = edge_argument(*prev, previous, edge, 1);
  }
  return sample;
}

// Fits the copulas of `tree` in place and returns the per-edge samples.
std::vector<EdgeSample> fit_tree_copulas(VineTree& tree, const VineTree* prev, std::span<const EdgeSample> previous,
                                         const std::vector<std::vector<double>>& pseudo, CopulaFamily family,
                                         bool need_outputs) {
  std::vector<EdgeSample> samples(tree.edges.size());
  parallel_for(tree.edges.size(), [&](std::size_t k) {
    VineEdge& edge = tree.edges[k];
    samples[k] = edge_inputs(edge, prev, previous, pseudo);
    edge.tau = kendall_tau(samples[k].u_first, samples[k].u_second);
    edge.weight = std::abs(edge.tau);
    edge.copula = fit_pair_copula(family, samples[k].u_first, samples[k].u_second);
    if (need_outputs) fill_outputs(edge, samples[k]);
  });
  return samples;
}

std::vector<GaussianKernel1D> fit_marginals(const Dataset& data) {
  std::vector<GaussianKernel1D> marginals;
  marginals.reserve(data.cols());
  for (std::size_t j = 0; j < data.cols(); ++j) {
    try {
      marginals.push_back(GaussianKernel1D::fit(data.column(j)));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::degenerate_sample) {
        fail(ErrorKind::degenerate_sample, "column '" + data.names()[j] + "' has zero variance");
      }
      throw;
    }
  }
  return marginals;
}

}  // namespace

std::size_t VineModel::copula_count() const noexcept {
  std::size_t count = 0;
  for (const auto& tree : trees) count += tree.edges.size();
  return count;
}

VineTree build_first_tree(const std::vector<std::vector<double>>& pseudo) {
  const std::size_t d = pseudo.size();
  if (d < 2) fail(ErrorKind::domain, "build_first_tree needs at least 2 variables");
  std::vector<double> weights(d * d, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> taus(d * d, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) pairs.emplace_back(a, b);
  }
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto [a, b] = pairs[k];
    const double tau = kendall_tau(pseudo[a], pseudo[b]);
    taus[a * d + b] = taus[b * d + a] = tau;
    weights[a * d + b] = weights[b * d + a] = std::abs(tau);
  });

  VineTree tree;
  tree.level = 1;
  tree.node_count = d;
  for (const auto& te : maximum_spanning_tree(d, weights)) {
    VineEdge edge;
    edge.conditioned = {te.a, te.b};
    edge.constraint = {te.a, te.b};
    edge.nodes = {te.a, te.b};
    edge.tau = taus[te.a * d + te.b];
    edge.weight = te.weight;
    tree.edges.push_back(std::move(edge));
  }
  return tree;
}

std::vector<double> edge_argument(const VineTree& prev, std::span<const EdgeSample> previous, const VineEdge& edge,
                                  std::size_t side) {
  const std::size_t node = edge.nodes[side];
  return passed_value(prev.edges.at(node), previous[node], edge.conditioned[side]);
}

VineTree build_next_tree(const VineTree& prev, std::span<const EdgeSample> previous) {
  const std::size_t m = prev.edges.size();
  if (m < 2) fail(ErrorKind::domain, "build_next_tree needs a tree with at least 2 edges");
  if (previous.size() != m) fail(ErrorKind::domain, "build_next_tree: one sample per previous edge required");

  std::vector<double> weights(m * m, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (share_node(prev.edges[i], prev.edges[j])) candidates.emplace_back(i, j);
    }
  }
  parallel_for(candidates.size(), [&](std::size_t k) {
    const auto [i, j] = candidates[k];
    const VineEdge edge = join_edges(prev, i, j);
    const auto first = edge_argument(prev, previous, edge, 0);
    const auto second = edge_argument(prev, previous, edge, 1);
    weights[i * m + j] = weights[j * m + i] = std::abs(kendall_tau(first, second));
  });

  VineTree tree;
  tree.level = prev.level + 1;
  tree.node_count = m;
  for (const auto& te : maximum_spanning_tree(m, weights)) {
    VineEdge edge = join_edges(prev, te.a, te.b);
    edge.weight = te.weight;
    tree.edges.push_back(std::move(edge));
  }
  return tree;
}

std::vector<std::vector<double>> marginal_pseudo_observations(const VineModel& vine, const Dataset& data) {
  if (data.cols() != vine.dimension()) fail(ErrorKind::schema_mismatch, "data and vine differ in column count");
  std::vector<std::vector<double>> pseudo(vine.dimension());
  parallel_for(vine.dimension(), [&](std::size_t j) { pseudo[j] = kde1d_cdf(vine.marginals[j], data.column(j)); });
  return pseudo;
}

VineModel fit_vine(const Dataset& data, const VineFitOptions& options) {
  if (data.cols() < 1) fail(ErrorKind::insufficient_data, "fit_vine needs at least one column");
  if (data.rows() < kMinFitRows) {
    fail(ErrorKind::insufficient_data,
         "fit_vine needs at least " + std::to_string(kMinFitRows) + " rows, got " + std::to_string(data.rows()));
  }
  if (options.truncation < 1) fail(ErrorKind::configuration, "truncation must be at least 1");
  if (options.target_index && *options.target_index >= data.cols()) {
    fail(ErrorKind::configuration, "target index out of range");
  }

  VineModel vine;
  vine.variable_names = data.names();
  vine.marginals = fit_marginals(data);
  vine.target_index = options.target_index;
  vine.metadata = FitMetadata{data.rows(), options.seed, options.truncation, std::string(family_name(options.family)),
                              options.timestamp};

  const std::size_t d = data.cols();
  const std::size_t levels = std::min(options.truncation, d - 1);
  if (levels == 0) return vine;

  const auto pseudo = marginal_pseudo_observations(vine, data);
  std::vector<EdgeSample> previous;
  for (std::size_t level = 1; level <= levels; ++level) {
    VineTree tree = level == 1 ? build_first_tree(pseudo) : build_next_tree(vine.trees.back(), previous);
    const VineTree* prev = level == 1 ? nullptr : &vine.trees.back();
    auto samples = fit_tree_copulas(tree, prev, previous, pseudo, options.family, level < levels);
    vine.trees.push_back(std::move(tree));
    previous = std::move(samples);
  }
  return vine;
}

VineModel refit_vine(const VineModel& structure, const Dataset& data, CopulaFamily family) {
  if (data.cols() != structure.dimension()) fail(ErrorKind::schema_mismatch, "data and vine differ in column count");
  if (data.rows() < kMinFitRows) fail(ErrorKind::insufficient_data, "refit_vine needs at least 20 rows");
  VineModel vine = structure;
  vine.marginals = fit_marginals(data);
  vine.metadata.n = data.rows();
  vine.metadata.family = std::string(family_name(family));
  const auto pseudo = marginal_pseudo_observations(vine, data);
  std::vector<EdgeSample> previous;
  for (std::size_t level = 0; level < vine.trees.size(); ++level) {
    const VineTree* prev = level == 0 ? nullptr : &vine.trees[level - 1];
    previous = fit_tree_copulas(vine.trees[level], prev, previous, pseudo, family, level + 1 < vine.trees.size());
  }
  return vine;
}

std::vector<std::vector<EdgeSample>> vine_edge_samples(const VineModel& vine,
                                                       const std::vector<std::vector<double>>& pseudo,
                                                       std::size_t levels) {
  levels = std::min(levels, vine.trees.size());
  std::vector<std::vector<EdgeSample>> out;
  for (std::size_t level = 0; level < levels; ++level) {
    const VineTree& tree = vine.trees[level];
    const VineTree* prev = level == 0 ? nullptr : &vine.trees[level - 1];
    std::span<const EdgeSample> previous;
    if (level > 0) previous = out.back();
    std::vector<EdgeSample> samples(tree.edges.size());
    parallel_for(tree.edges.size(), [&](std::size_t k) {
      samples[k] = edge_inputs(tree.edges[k], prev, previous, pseudo);
      if (level + 1 < levels) fill_outputs(tree.edges[k], samples[k]);
    });
    out.push_back(std::move(samples));
  }
  return out;
}

double conditional_cdf(const VineModel& vine, std::size_t j, std::span<const std::size_t> conditioning,
                       std::span<const double> x) {
  if (j >= vine.dimension()) fail(ErrorKind::domain, "conditional_cdf: variable index out of range");
  Set given(conditioning.begin(), conditioning.end());
  std::sort(given.begin(), given.end());
  if (std::adjacent_find(given.begin(), given.end()) != given.end() || std::binary_search(given.begin(), given.end(), j)) {
    fail(ErrorKind::domain, "conditional_cdf: conditioning set must be distinct from the variable");
  }
  if (given.empty()) return kde1d_cdf(vine.marginals[j], x[j]);

  const std::size_t level = given.size();
  if (level > vine.trees.size()) {
    fail(ErrorKind::structural, "conditional_cdf: conditioning set larger than the stored trees allow");
  }
  Set wanted = given;
  wanted.insert(std::upper_bound(wanted.begin(), wanted.end(), j), j);
  for (const VineEdge& edge : vine.trees[level - 1].edges) {
    if (edge.constraint != wanted) continue;
    if (edge.conditioned[0] != j && edge.conditioned[1] != j) continue;
    const std::size_t other = edge.conditioned[0] == j ? edge.conditioned[1] : edge.conditioned[0];
    const double uj = conditional_cdf(vine, j, edge.conditioning, x);
    const double uo = conditional_cdf(vine, other, edge.conditioning, x);
    return edge.conditioned[0] == j ? h_given_second(edge.copula, uj, uo) : h_given_first(edge.copula, uo, uj);
  }
  fail(ErrorKind::structural, "conditional_cdf: no vine edge provides the requested conditional");
}

double pair_copula_log_sum(const VineModel& vine, std::span<const double> u, std::optional<std::size_t> involving) {
  double total = 0.0;
  std::vector<std::array<double, 2>> previous;
  std::vector<std::array<double, 2>> current;
  for (std::size_t level = 0; level < vine.trees.size(); ++level) {
    const VineTree& tree = vine.trees[level];
    const bool need_outputs = level + 1 < vine.trees.size();
    current.assign(tree.edges.size(), {0.0, 0.0});
    for (std::size_t k = 0; k < tree.edges.size(); ++k) {
      const VineEdge& edge = tree.edges[k];
      const bool counted =
          !involving || std::binary_search(edge.constraint.begin(), edge.constraint.end(), *involving);
      if (!counted && !need_outputs) continue;
      double a, b;
      if (level == 0) {
        a = u[edge.conditioned[0]];
        b = u[edge.conditioned[1]];
      } else {
        const VineTree& prev = vine.trees[level - 1];
        a = passed_value(prev.edges[edge.nodes[0]], previous[edge.nodes[0]], edge.conditioned[0]);
        b = passed_value(prev.edges[edge.nodes[1]], previous[edge.nodes[1]], edge.conditioned[1]);
      }
      if (counted) total += npvine::log_density(edge.copula, a, b);
      if (need_outputs) current[k] = {h_given_second(edge.copula, a, b), h_given_first(edge.copula, a, b)};
    }
    previous.swap(current);
  }
  return total;
}

double log_density(const VineModel& vine, std::span<const double> x) {
  const std::size_t d = vine.dimension();
  if (x.size() != d) fail(ErrorKind::domain, "log_density: point has wrong dimension");
  double total = 0.0;
  std::vector<double> u(d);
  for (std::size_t j = 0; j < d; ++j) {
    total += kde1d_log_pdf(vine.marginals[j], x[j]);
    u[j] = kde1d_cdf(vine.marginals[j], x[j]);
  }
  return total + pair_copula_log_sum(vine, u);
}

void validate(const VineModel& vine) {
  const std::size_t d = vine.dimension();
  auto bad = [](const std::string& what) { fail(ErrorKind::structural, "invalid vine: " + what); };
  if (d == 0) bad("no marginals");
  if (vine.variable_names.size() != d) bad("variable names do not match marginal count");
  if (vine.target_index && *vine.target_index >= d) bad("target index out of range");
  if (vine.trees.size() > d - 1) bad("more than d-1 trees");
  for (std::size_t level = 0; level < vine.trees.size(); ++level) {
    const VineTree& tree = vine.trees[level];
    const std::size_t node_count = level == 0 ? d : vine.trees[level - 1].edges.size();
    if (tree.level != level + 1) bad("tree levels out of order");
    if (tree.node_count != node_count) bad("node count mismatch at level " + std::to_string(level + 1));
    if (tree.edges.size() != d - level - 1) bad("tree " + std::to_string(level + 1) + " has wrong edge count");

    // Spanning-tree check by union-find over the nodes.
    std::vector<std::size_t> parent(node_count);
    for (std::size_t i = 0; i < node_count; ++i) parent[i] = i;
    auto root = [&](std::size_t v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    for (const VineEdge& e : tree.edges) {
      if (e.conditioned[0] >= e.conditioned[1] || e.conditioned[1] >= d) bad("conditioned pair malformed");
      if (e.conditioning.size() != level) bad("conditioning set has wrong size");
      if (!std::is_sorted(e.conditioning.begin(), e.conditioning.end())) bad("conditioning set not sorted");
      Set c{e.conditioned[0], e.conditioned[1]};
      if (!set_intersection(c, e.conditioning).empty()) bad("conditioned and conditioning sets overlap");
      if (set_union(c, e.conditioning) != e.constraint) bad("constraint set is not C u D");
      if (e.nodes[0] >= node_count || e.nodes[1] >= node_count || e.nodes[0] == e.nodes[1]) bad("edge nodes out of range");
      if (level == 0) {
        if (e.nodes[0] != e.conditioned[0] || e.nodes[1] != e.conditioned[1]) bad("first-tree nodes must be the variables");
      } else {
        const VineTree& prev = vine.trees[level - 1];
        const VineEdge expected = join_edges(prev, e.nodes[0], e.nodes[1]);
        if (!share_node(prev.edges[e.nodes[0]], prev.edges[e.nodes[1]])) bad("proximity condition violated");
        if (expected.conditioned != e.conditioned || expected.conditioning != e.conditioning ||
            expected.nodes != e.nodes) {
          bad("edge sets inconsistent with the previous tree");
        }
      }
      const auto ra = root(e.nodes[0]);
      const auto rb = root(e.nodes[1]);
      if (ra == rb) bad("tree " + std::to_string(level + 1) + " contains a cycle");
      parent[ra] = rb;
    }
  }
}

}  // namespace npvine
