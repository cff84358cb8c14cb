#pragma once

#include <cstdint>
#include <vector>

namespace falkdet {

// Stable 64-bit seed derivation so that concurrent per-class / per-iteration
// work draws from independent, reproducible streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Uniform sample without replacement of `count` indices from [0, pool_size).
// count >= pool_size returns the whole range in order.
std::vector<int> sample_without_replacement(int pool_size, int count,
                                            std::uint64_t seed);

template <typename T>
std::vector<T> subsample_negatives(const std::vector<T>& pool, int count,
                                   std::uint64_t seed) {
  std::vector<T> out;
  for (int i : sample_without_replacement(static_cast<int>(pool.size()), count, seed))
    out.push_back(pool[i]);
  return out;
}

struct CenterSelection {
  std::vector<int> positive_indices;  // into the positive pool
  std::vector<int> negative_indices;  // into the negative pool
  bool under_full = false;            // fewer than M centers available

  int positive_count() const { return static_cast<int>(positive_indices.size()); }
  int negative_count() const { return static_cast<int>(negative_indices.size()); }
  int total() const { return positive_count() + negative_count(); }
};

// Class-rebalanced Nystrom center selection: P' = min(P, floor(M/2)) positives,
// the remaining M - P' centers uniform from the negatives. If the negative pool
// falls short, all negatives are taken and extra positives top the set up.
CenterSelection rebalanced_center_sampling(int num_positives, int num_negatives,
                                           int m, std::uint64_t seed);

}  // namespace falkdet
