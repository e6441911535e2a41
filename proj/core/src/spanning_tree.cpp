#include "npvine/spanning_tree.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "npvine/error.hpp"

namespace npvine {

namespace {

struct Candidate {
  double weight = -std::numeric_limits<double>::infinity();
  std::size_t from = 0;
  bool valid = false;
};

std::pair<std::size_t, std::size_t> ordered(std::size_t a, std::size_t b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

// True when edge (from, to) with `weight` should replace `current` as the best link of `to`.
bool better(double weight, std::size_t from, std::size_t to, const Candidate& current, std::size_t current_to) {
  if (!current.valid || weight > current.weight) return true;
  if (weight < current.weight) return false;
  return ordered(from, to) < ordered(current.from, current_to);
}

}  // namespace

std::vector<TreeEdge> maximum_spanning_tree(std::size_t nodes, std::span<const double> weights) {
  if (weights.size() != nodes * nodes) fail(ErrorKind::domain, "maximum_spanning_tree: weight matrix has wrong size");
  std::vector<TreeEdge> tree;
  if (nodes < 2) return tree;
  tree.reserve(nodes - 1);

  std::vector<bool> in_tree(nodes, false);
  std::vector<Candidate> best(nodes);
  auto relax = [&](std::size_t from) {
    for (std::size_t to = 0; to < nodes; ++to) {
      if (in_tree[to]) continue;
      const double w = weights[from * nodes + to];
      if (std::isnan(w)) continue;
      if (better(w, from, to, best[to], to)) best[to] = Candidate{w, from, true};
    }
  };

  in_tree[0] = true;
  relax(0);
  for (std::size_t step = 1; step < nodes; ++step) {
    std::size_t pick = nodes;
    for (std::size_t v = 0; v < nodes; ++v) {
      if (in_tree[v] || !best[v].valid) continue;
      if (pick == nodes || better(best[v].weight, best[v].from, v, best[pick], pick)) pick = v;
    }
    if (pick == nodes) fail(ErrorKind::structural, "maximum_spanning_tree: graph is disconnected");
    const auto [a, b] = ordered(best[pick].from, pick);
    tree.push_back(TreeEdge{a, b, best[pick].weight});
    in_tree[pick] = true;
    relax(pick);
  }
  return tree;
}

}  // namespace npvine
