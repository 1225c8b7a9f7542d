#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace degen {

/// Deterministic pseudo-random source. The engine is std::mt19937_64 (its
/// output sequence is fixed by the standard) and every distribution is
/// derived here by hand, so a seed yields the same draws on any platform.
///
/// A SeededRng is single-owner mutable state. To fan out independent
/// streams, derive children with child("name") instead of sharing one
/// instance across call sites.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();

  /// Uniform draw in [0, 1).
  double uniform();

  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (the pair partner is cached).
  double normal();

  double normal(double mean, double sd);

  /// Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  bool bernoulli(double p);

  /// Small-lambda Poisson draw (Knuth multiplication method).
  int poisson(double lambda);

  /// Derive an independent child stream keyed by a label.
  SeededRng child(std::string_view name) const;

  /// Child stream keyed by an index (participant ids, restart numbers).
  SeededRng child(std::uint64_t index) const;

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace degen
