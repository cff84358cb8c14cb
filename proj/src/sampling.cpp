#include "falkdet/sampling.hpp"

#include <numeric>
#include <random>
#include <stdexcept>

namespace falkdet {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(seed ^ splitmix64(a)) ^ splitmix64(~b));
}

std::vector<int> sample_without_replacement(int pool_size, int count,
                                            std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("sample_without_replacement: count < 0");
  std::vector<int> idx(pool_size);
  std::iota(idx.begin(), idx.end(), 0);
  if (count >= pool_size) return idx;

  std::mt19937_64 rng(seed);
  // partial Fisher-Yates: first `count` entries are the sample
  for (int i = 0; i < count; ++i) {
    std::uniform_int_distribution<int> pick(i, pool_size - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  return idx;
}

CenterSelection rebalanced_center_sampling(int num_positives, int num_negatives,
                                           int m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("rebalanced_center_sampling: M must be >= 1");
  if (num_positives < 0 || num_negatives < 0)
    throw std::invalid_argument("rebalanced_center_sampling: negative pool size");
  if (num_positives + num_negatives == 0)
    throw std::invalid_argument("rebalanced_center_sampling: both pools empty");

  const int p_prime = std::min(num_positives, m / 2);
  int want_neg = m - p_prime;

  CenterSelection sel;
  if (want_neg > num_negatives) {
    // negatives exhausted: take them all, top up with extra positives
    sel.negative_indices = sample_without_replacement(num_negatives, num_negatives, seed);
    const int want_pos = std::min(num_positives, m - num_negatives);
    sel.positive_indices =
        sample_without_replacement(num_positives, want_pos, derive_seed(seed, 1));
  } else {
    sel.positive_indices =
        sample_without_replacement(num_positives, p_prime, derive_seed(seed, 1));
    sel.negative_indices = sample_without_replacement(num_negatives, want_neg, seed);
  }
  sel.under_full = sel.total() < m;
  return sel;
}

}  // namespace falkdet
