#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <set>

#include "npvine/error.hpp"
#include "npvine/kde.hpp"
#include "npvine/normal.hpp"
#include "npvine/rng.hpp"
#include "npvine/spanning_tree.hpp"
#include "npvine/vine.hpp"
#include "support/oracles.hpp"

namespace npvine {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Markov chain x_{k+1} = x_k + noise_scale * e_k.
Dataset chain_data(std::size_t n, std::size_t d, std::uint64_t seed, double noise_scale = 0.6) {
  Rng rng(seed);
  std::vector<std::vector<double>> cols(d, std::vector<double>(n));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  for (std::size_t i = 0; i < n; ++i) {
    cols[0][i] = rng.normal();
    for (std::size_t j = 1; j < d; ++j) cols[j][i] = cols[j - 1][i] + noise_scale * rng.normal();
  }
  return Dataset(names, cols);
}

std::set<std::pair<std::size_t, std::size_t>> edge_set(const VineTree& tree) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : tree.edges) out.emplace(e.conditioned[0], e.conditioned[1]);
  return out;
}

TEST(SpanningTree, ThreeNodeExample) {
  const std::vector<double> w{kNaN, 0.9, 0.5, 0.9, kNaN, 0.1, 0.5, 0.1, kNaN};
  const auto tree = maximum_spanning_tree(3, w);
  ASSERT_EQ(tree.size(), 2u);
  EXPECT_EQ(tree[0], (TreeEdge{0, 1, 0.9}));
  EXPECT_EQ(tree[1], (TreeEdge{0, 2, 0.5}));
  EXPECT_EQ(testing::enumerate_max_spanning_tree(3, w), (std::vector<TreeEdge>{{0, 1, 0.9}, {0, 2, 0.5}}));
}

TEST(SpanningTree, PrimEqualsExhaustiveEnumeration) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + rng.below(5);
    std::vector<double> w(d * d, kNaN);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) w[a * d + b] = w[b * d + a] = rng.uniform();
    }
    auto prim = maximum_spanning_tree(d, w);
    std::sort(prim.begin(), prim.end(), [](auto& l, auto& r) { return std::pair(l.a, l.b) < std::pair(r.a, r.b); });
    EXPECT_EQ(prim, testing::enumerate_max_spanning_tree(d, w)) << "trial " << trial;
  }
}

TEST(SpanningTree, TiesPreferSmallestPairAndDisconnectedFails) {
  const std::vector<double> flat(16, 0.5);
  const auto tree = maximum_spanning_tree(4, flat);
  EXPECT_EQ(tree, (std::vector<TreeEdge>{{0, 1, 0.5}, {0, 2, 0.5}, {0, 3, 0.5}}));
  std::vector<double> split(16, kNaN);
  split[0 * 4 + 1] = split[1 * 4 + 0] = 1.0;
  split[2 * 4 + 3] = split[3 * 4 + 2] = 1.0;
  try {
    maximum_spanning_tree(4, split);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::structural);
  }
}

TEST(BuildFirstTree, TwoVariablesGiveOneEdge) {
  const auto data = chain_data(50, 2, 1);
  std::vector<std::vector<double>> pseudo{pseudo_observations(data.column(0)), pseudo_observations(data.column(1))};
  const auto tree = build_first_tree(pseudo);
  ASSERT_EQ(tree.edges.size(), 1u);
  EXPECT_EQ(tree.edges[0].conditioned, (std::array<std::size_t, 2>{0, 1}));
  EXPECT_TRUE(tree.edges[0].conditioning.empty());
}

TEST(BuildFirstTree, RecoversChainStructure) {
  int recovered = 0;
  const std::set<std::pair<std::size_t, std::size_t>> chain{{0, 1}, {1, 2}, {2, 3}};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto data = chain_data(200, 4, 1000 + seed);
    std::vector<std::vector<double>> pseudo;
    for (std::size_t j = 0; j < 4; ++j) pseudo.push_back(pseudo_observations(data.column(j)));
    if (edge_set(build_first_tree(pseudo)) == chain) ++recovered;
  }
  EXPECT_GE(recovered, 45);
}

// T_1 with edges {1,2}, {1,3}, {3,4} in 1-based labels.
VineTree figure_tree() {
  VineTree t;
  t.level = 1;
  t.node_count = 4;
  for (auto [a, b] : {std::pair<std::size_t, std::size_t>{0, 1}, {0, 2}, {2, 3}}) {
    VineEdge e;
    e.conditioned = {a, b};
    e.constraint = {a, b};
    e.nodes = {a, b};
    t.edges.push_back(e);
  }
  return t;
}

std::vector<EdgeSample> placeholder_samples(std::size_t edges, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<EdgeSample> samples(edges);
  for (auto& s : samples) {
    for (int i = 0; i < 30; ++i) {
      s.first_given_second.push_back(rng.uniform_open());
      s.second_given_first.push_back(rng.uniform_open());
    }
  }
  return samples;
}

TEST(BuildNextTree, ReproducesTwoLevelExample) {
  const auto first = figure_tree();
  const auto second = build_next_tree(first, placeholder_samples(3, 4));
  ASSERT_EQ(second.edges.size(), 2u);
  std::set<std::pair<std::array<std::size_t, 2>, std::vector<std::size_t>>> labels;
  for (const auto& e : second.edges) {
    labels.emplace(e.conditioned, e.conditioning);
    EXPECT_EQ(e.constraint.size(), 3u);
  }
  // "2,3|1" and "1,4|3" in 1-based labels.
  const std::set<std::pair<std::array<std::size_t, 2>, std::vector<std::size_t>>> expected{
      {{1, 2}, {0}}, {{0, 3}, {2}}};
  EXPECT_EQ(labels, expected);
}

TEST(BuildNextTree, OnlyEdgesSharingANodeAreJoined) {
  // Chain 1-2-3-4: edges {1,2} and {3,4} share no node and must never be joined.
  VineTree chain;
  chain.node_count = 4;
  for (std::size_t a = 0; a < 3; ++a) {
    VineEdge e;
    e.conditioned = {a, a + 1};
    e.constraint = {a, a + 1};
    e.nodes = {a, a + 1};
    chain.edges.push_back(e);
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto next = build_next_tree(chain, placeholder_samples(3, seed));
    for (const auto& e : next.edges) {
      EXPECT_FALSE((e.nodes[0] == 0 && e.nodes[1] == 2) || (e.nodes[0] == 2 && e.nodes[1] == 0));
    }
  }
}

TEST(FitVine, FactorCounts) {
  const auto d4 = chain_data(120, 4, 3);
  VineFitOptions full;
  full.truncation = 3;
  const auto vine = fit_vine(d4, full);
  EXPECT_EQ(vine.marginals.size(), 4u);
  EXPECT_EQ(vine.copula_count(), 6u);
  for (std::size_t k = 0; k < vine.trees.size(); ++k) EXPECT_EQ(vine.trees[k].edges.size(), 4 - k - 1);

  const auto d10 = chain_data(100, 10, 4);
  EXPECT_EQ(fit_vine(d10).copula_count(), 9u);
  VineFitOptions too_deep;
  too_deep.truncation = 50;
  EXPECT_EQ(fit_vine(d10, too_deep).copula_count(), 45u);
}

TEST(FitVine, ConstraintAlgebraHoldsOnEveryEdge) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t d = 3 + seed % 4;
    VineFitOptions options;
    options.truncation = d - 1;
    const auto vine = fit_vine(chain_data(60, d, seed, 1.5), options);
    EXPECT_NO_THROW(validate(vine));
    for (std::size_t k = 0; k < vine.trees.size(); ++k) {
      for (const auto& e : vine.trees[k].edges) {
        std::vector<std::size_t> c_and_d = e.conditioning;
        c_and_d.push_back(e.conditioned[0]);
        c_and_d.push_back(e.conditioned[1]);
        std::sort(c_and_d.begin(), c_and_d.end());
        EXPECT_EQ(c_and_d, e.constraint);
        EXPECT_EQ(e.constraint.size(), k + 2);
        EXPECT_EQ(e.conditioning.size(), k);
      }
    }
  }
}

TEST(FitVine, RejectsSmallOrDegenerateData) {
  try {
    fit_vine(chain_data(19, 3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::insufficient_data);
  }
  auto data = chain_data(40, 3, 1);
  data.set_column(1, std::vector<double>(40, 3.0));
  try {
    fit_vine(data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_sample);
    EXPECT_NE(std::string(e.what()).find("x2"), std::string::npos);
  }
}

TEST(FitVine, ParallelWeightFillDoesNotChangeResult) {
  const auto data = chain_data(150, 6, 12, 1.0);
  VineFitOptions options;
  options.truncation = 3;
  ::setenv("NPVINE_THREADS", "1", 1);
  const auto serial = fit_vine(data, options);
  ::setenv("NPVINE_THREADS", "4", 1);
  const auto threaded = fit_vine(data, options);
  ::unsetenv("NPVINE_THREADS");
  ASSERT_EQ(serial.trees.size(), threaded.trees.size());
  for (std::size_t k = 0; k < serial.trees.size(); ++k) {
    for (std::size_t e = 0; e < serial.trees[k].edges.size(); ++e) {
      EXPECT_EQ(serial.trees[k].edges[e].conditioned, threaded.trees[k].edges[e].conditioned);
      EXPECT_EQ(serial.trees[k].edges[e].tau, threaded.trees[k].edges[e].tau);
    }
  }
  const auto x = data.row(7);
  EXPECT_EQ(log_density(serial, x), log_density(threaded, x));
}

TEST(LogDensity, TwoVariableModelIsMarginalsTimesCopula) {
  const auto data = chain_data(300, 2, 8);
  const auto vine = fit_vine(data);
  const auto m1 = GaussianKernel1D::fit(data.column(0));
  const auto m2 = GaussianKernel1D::fit(data.column(1));
  const auto copula = fit_kernel_copula(pseudo_observations(data.column(0)), pseudo_observations(data.column(1)));
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> x{2.0 * rng.normal(), 2.0 * rng.normal()};
    const double expected = kde1d_log_pdf(m1, x[0]) + kde1d_log_pdf(m2, x[1]) +
                            kernel_copula_log_density(copula, std::clamp(kde1d_cdf(m1, x[0]), kBoundaryEps, 1 - kBoundaryEps),
                                                      std::clamp(kde1d_cdf(m2, x[1]), kBoundaryEps, 1 - kBoundaryEps));
    EXPECT_NEAR(log_density(vine, x), expected, 1e-12);
  }
}

TEST(LogDensity, OneDimensionAndIndependenceReduceToMarginals) {
  const auto data = chain_data(100, 3, 2);
  const auto one = fit_vine(data.project(std::vector<std::string>{"x2"}));
  EXPECT_TRUE(one.trees.empty());
  EXPECT_NEAR(log_density(one, std::vector<double>{0.4}), kde1d_log_pdf(one.marginals[0], 0.4), 1e-15);

  VineFitOptions independent;
  independent.family = CopulaFamily::independence;
  const auto vine = fit_vine(data, independent);
  const std::vector<double> x{0.1, -0.3, 1.2};
  double expected = 0.0;
  for (std::size_t j = 0; j < 3; ++j) expected += kde1d_log_pdf(vine.marginals[j], x[j]);
  EXPECT_NEAR(log_density(vine, x), expected, 1e-14);
  EXPECT_TRUE(std::isfinite(log_density(fit_vine(data), std::vector<double>{40.0, -40.0, 1e3})));
}

TEST(LogDensity, TwoVariableModelIntegratesToOne) {
  const auto data = chain_data(200, 2, 21);
  const auto vine = fit_vine(data);
  double lo[2], hi[2];
  for (std::size_t j = 0; j < 2; ++j) {
    const auto [mn, mx] = std::minmax_element(data.column(j).begin(), data.column(j).end());
    lo[j] = *mn - 5.0 * vine.marginals[j].bandwidth();
    hi[j] = *mx + 5.0 * vine.marginals[j].bandwidth();
  }
  const testing::GaussLegendre gx(150, lo[0], hi[0]);
  const testing::GaussLegendre gy(150, lo[1], hi[1]);
  double mass = 0.0;
  for (std::size_t i = 0; i < 150; ++i) {
    for (std::size_t k = 0; k < 150; ++k) {
      mass += gx.weights[i] * gy.weights[k] * std::exp(log_density(vine, std::vector<double>{gx.nodes[i], gy.nodes[k]}));
    }
  }
  EXPECT_NEAR(mass, 1.0, 3e-2);
}

TEST(ConditionalCdf, BaseCaseAndSingleStep) {
  const auto data = chain_data(150, 3, 6);
  VineFitOptions options;
  options.truncation = 2;
  const auto vine = fit_vine(data, options);
  const std::vector<double> x{0.3, -0.2, 0.9};
  EXPECT_DOUBLE_EQ(conditional_cdf(vine, 1, {}, x), kde1d_cdf(vine.marginals[1], x[1]));
  const auto& edge = vine.trees[0].edges[0];
  const auto [a, b] = edge.conditioned;
  const std::vector<std::size_t> given_b{b};
  EXPECT_DOUBLE_EQ(conditional_cdf(vine, a, given_b, x),
                   h_given_second(edge.copula, kde1d_cdf(vine.marginals[a], x[a]), kde1d_cdf(vine.marginals[b], x[b])));
}

TEST(ConditionalCdf, MatchesQuadratureOfJointDensity) {
  const auto data = chain_data(120, 3, 9, 0.8);
  VineFitOptions options;
  options.truncation = 2;
  const auto vine = fit_vine(data, options);
  const auto& top = vine.trees[1].edges[0];
  Rng rng(10);
  double worst = 0.0;
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t j = top.conditioned[trial % 2];
    std::vector<std::size_t> given;
    for (std::size_t k = 0; k < 3; ++k) {
      if (k != j) given.push_back(k);
    }
    std::vector<double> x = data.row(rng.below(data.rows()));
    const double t = x[j] + 0.5 * rng.normal();
    auto joint = [&](double value) {
      auto point = x;
      point[j] = value;
      return std::exp(log_density(vine, point));
    };
    const double inf = std::numeric_limits<double>::infinity();
    const double oracle = testing::integrate(joint, -inf, t, 1e-11) / testing::integrate(joint, -inf, inf, 1e-11);
    x[j] = t;
    worst = std::max(worst, std::abs(conditional_cdf(vine, j, given, x) - oracle));
  }
  EXPECT_LE(worst, 5e-3);
}

TEST(ConditionalCdf, UnavailableConditionalIsStructuralError) {
  const auto data = chain_data(80, 4, 2);
  const auto vine = fit_vine(data);  // first tree only
  const std::vector<double> x{0.0, 0.0, 0.0, 0.0};
  try {
    conditional_cdf(vine, 0, std::vector<std::size_t>{1, 2}, x);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::structural);
  }
}

TEST(RefitVine, KeepsStructureAndMatchesFreshFitOnSameData) {
  const auto data = chain_data(100, 5, 17);
  VineFitOptions options;
  options.truncation = 2;
  const auto vine = fit_vine(data, options);
  const auto refit = refit_vine(vine, data);
  const auto x = data.row(3);
  EXPECT_EQ(log_density(refit, x), log_density(vine, x));
  const auto other = refit_vine(vine, chain_data(100, 5, 18));
  for (std::size_t k = 0; k < vine.trees.size(); ++k) {
    for (std::size_t e = 0; e < vine.trees[k].edges.size(); ++e) {
      EXPECT_EQ(other.trees[k].edges[e].conditioned, vine.trees[k].edges[e].conditioned);
      EXPECT_EQ(other.trees[k].edges[e].nodes, vine.trees[k].edges[e].nodes);
    }
  }
}

}  // namespace
}  // namespace npvine
