#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace npvine {

struct TreeEdge {
  std::size_t a;  // a < b
  std::size_t b;
  double weight;

  friend bool operator==(const TreeEdge&, const TreeEdge&) = default;
};

/// Maximum spanning tree of a graph on `nodes` vertices by Prim's algorithm,
/// O(nodes^2). `weights` is the row-major nodes x nodes matrix; NaN marks an
/// absent edge. Among equal weights the lexicographically smallest (a, b)
/// pair is taken. Edges are returned in the order they join the tree.
/// Throws Error(structural) when the graph is disconnected.
std::vector<TreeEdge> maximum_spanning_tree(std::size_t nodes, std::span<const double> weights);

}  // namespace npvine
