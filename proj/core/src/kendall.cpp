#include "npvine/kendall.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "npvine/error.hpp"

namespace npvine {

namespace {

// Pairs sharing a key among consecutive runs of equal values.
template <typename Equal>
std::int64_t tied_pairs(const std::vector<std::size_t>& order, Equal equal) {
  std::int64_t pairs = 0;
  std::int64_t run = 1;
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (equal(order[i - 1], order[i])) {
      ++run;
    } else {
      pairs += run * (run - 1) / 2;
      run = 1;
    }
  }
  return pairs + run * (run - 1) / 2;
}

// Stable merge sort of `order` by y, counting strict inversions.
std::int64_t sort_counting_swaps(std::vector<std::size_t>& order, std::span<const double> y) {
  const std::size_t n = order.size();
  std::vector<std::size_t> buffer(n);
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo < n; lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, n);
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (y[order[j]] < y[order[i]]) {
          swaps += static_cast<std::int64_t>(mid - i);
          buffer[k++] = order[j++];
        } else {
          buffer[k++] = order[i++];
        }
      }
      while (i < mid) buffer[k++] = order[i++];
      while (j < hi) buffer[k++] = order[j++];
    }
    order.swap(buffer);
  }
  return swaps;
}

}  // namespace

std::int64_t kendall_score(RankPairSample sample) {
  const auto& [x, y] = sample;
  if (x.size() != y.size()) fail(ErrorKind::domain, "kendall_tau: samples differ in length");
  const std::size_t n = x.size();
  if (n < 2) fail(ErrorKind::insufficient_data, "kendall_tau needs at least 2 pairs");

  // Knight's algorithm: sort by (x, y), count ties, then count inversions in y.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  const auto total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t x_ties = tied_pairs(order, [&](std::size_t a, std::size_t b) { return x[a] == x[b]; });
  const std::int64_t joint_ties =
      tied_pairs(order, [&](std::size_t a, std::size_t b) { return x[a] == x[b] && y[a] == y[b]; });
  const std::int64_t swaps = sort_counting_swaps(order, y);
  const std::int64_t y_ties = tied_pairs(order, [&](std::size_t a, std::size_t b) { return y[a] == y[b]; });

  return total - x_ties - y_ties + joint_ties - 2 * swaps;
}

double kendall_tau(RankPairSample sample) {
  const auto n = static_cast<std::int64_t>(sample.x.size());
  const std::int64_t score = kendall_score(sample);
  return static_cast<double>(score) / static_cast<double>(n * (n - 1) / 2);
}

}  // namespace npvine
