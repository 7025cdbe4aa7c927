#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pprhub/common.hpp"

// All randomness flows from explicit 64-bit seeds through std::mt19937_64,
// whose output sequence is fixed by the standard. Variate generation is
// hand-rolled below (std::*_distribution output is implementation-defined).

namespace pprhub {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

/// Independent stream derived from (seed, index); used to shard work
/// (Monte Carlo walks, replicated runs) deterministically.
inline Rng make_substream(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(splitmix64(seed) ^ (index + 0x51ED2701A9B5D9C3ull)));
}

/// Uniform integer in [0, bound), unbiased via rejection.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  // threshold == 2^64 mod bound; values below it would bias the modulus.
  const std::uint64_t threshold = (0 - bound) % bound;
  std::uint64_t x = rng();
  while (x < threshold) x = rng();
  return x % bound;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Knuth product method; adequate for the small means used by degree models.
inline std::uint64_t poisson(Rng& rng, double mean) {
  require(mean >= 0.0 && mean < 700.0, "poisson mean out of range");
  const double threshold = std::exp(-mean);
  std::uint64_t k = 0;
  double prod = 1.0;
  do {
    ++k;
    prod *= uniform01(rng);
  } while (prod > threshold);
  return k - 1;
}

/// Walker/Vose alias table: O(n) build, O(1) categorical draws.
class AliasSampler {
 public:
  AliasSampler() = default;

  explicit AliasSampler(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    require(n > 0, "alias sampler needs at least one weight");
    double total = 0.0;
    for (double w : weights) {
      require(w >= 0.0, "alias sampler weights must be non-negative");
      total += w;
    }
    require(total > 0.0, "alias sampler needs positive total weight");
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i)
      scaled[i] = weights[i] * static_cast<double>(n) / total;
    std::vector<std::uint32_t> small, large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      small.pop_back();
      const std::uint32_t l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::uint32_t l : large) prob_[l] = 1.0;
    for (std::uint32_t s : small) prob_[s] = 1.0;  // numerical leftovers
  }

  std::size_t size() const { return prob_.size(); }

  std::uint32_t draw(Rng& rng) const {
    const std::uint64_t i = uniform_below(rng, prob_.size());
    return uniform01(rng) < prob_[i] ? static_cast<std::uint32_t>(i) : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

}  // namespace pprhub
