#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>
#include <vector>

namespace cbo {

// Identifies one random stream. Streams with distinct ids are independent;
// equal (master_seed, id) always reproduces the same draws, independent of
// evaluation order or thread count.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t run = 0;
  std::uint64_t particle = 0;
  std::uint64_t iteration = 0;
  std::uint64_t component = 0;

  SeedSpec with_particle(std::uint64_t p) const {
    SeedSpec s = *this;
    s.particle = p;
    return s;
  }
  SeedSpec with_iteration(std::uint64_t k) const {
    SeedSpec s = *this;
    s.iteration = k;
    return s;
  }
  SeedSpec with_run(std::uint64_t r) const {
    SeedSpec s = *this;
    s.run = r;
    return s;
  }
};

// Usage domains, folded into the stream key so e.g. oracle draws and
// diffusion draws at the same (run, particle, iteration) never collide.
enum class StreamPurpose : std::uint64_t {
  init = 1,
  oracle = 2,
  diffusion = 3,
  dataset = 4,
  split = 5,
  trial = 6,
};

namespace detail {

// splitmix64 finalizer; bijective 64-bit mixer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Counter-keyed xoshiro256++ stream. Construction hashes the full
// (master_seed, purpose, run, particle, iteration, component) tuple through
// splitmix64, so streams can be created in any order with identical output.
class RngStream {
 public:
  RngStream(const SeedSpec& seed, StreamPurpose purpose) {
    std::uint64_t h = detail::mix64(seed.master_seed);
    h = detail::combine(h, static_cast<std::uint64_t>(purpose));
    h = detail::combine(h, seed.run);
    h = detail::combine(h, seed.particle);
    h = detail::combine(h, seed.iteration);
    h = detail::combine(h, seed.component);
    // splitmix64 sequence expansion into the xoshiro state; never all-zero.
    std::uint64_t sm = h;
    for (auto& word : state_) {
      sm += 0x9e3779b97f4a7c15ULL;
      word = detail::mix64(sm);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [0, bound) by rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Uniform subset of size n drawn from {0, ..., m-1} without replacement,
// via partial Fisher-Yates. n == m returns the identity subset.
inline std::vector<std::uint32_t> sample_without_replacement(std::uint64_t m,
                                                             std::uint64_t n,
                                                             RngStream& rng) {
  std::vector<std::uint32_t> idx(m);
  for (std::uint64_t i = 0; i < m; ++i) idx[i] = static_cast<std::uint32_t>(i);
  if (n >= m) return idx;
  for (std::uint64_t j = 0; j < n; ++j) {
    const std::uint64_t pick = j + rng.next_below(m - j);
    std::swap(idx[j], idx[pick]);
  }
  idx.resize(n);
  return idx;
}

}  // namespace cbo
