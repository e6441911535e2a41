#pragma once

#include <cstdint>
#include <span>

namespace npvine {

/// Paired sample whose rank association is measured. Both spans must have the
/// same length n >= 2.
struct RankPairSample {
  std::span<const double> x;
  std::span<const double> y;
};

/// Concordant minus discordant pair count; tied pairs count zero.
std::int64_t kendall_score(RankPairSample sample);

/// Kendall's tau-a: kendall_score / (n (n - 1) / 2), via merge-sort inversion
/// counting in O(n log n). Throws Error(insufficient_data) for n < 2 and
/// Error(domain) for unequal lengths.
double kendall_tau(RankPairSample sample);

inline double kendall_tau(std::span<const double> x, std::span<const double> y) {
  return kendall_tau(RankPairSample{x, y});
}

}  // namespace npvine
