#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

namespace svykit {

/// SplitMix64 step; used for seeding and stream derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic pseudo-random generator (xoshiro256++) with explicit
/// substream derivation: stream(seed, domain, index) yields an independent
/// generator per (domain, index) pair, so parallel replications produce the
/// same draws regardless of worker count or scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  static Rng stream(std::uint64_t seed, std::uint64_t domain, std::uint64_t index) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (domain * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    std::uint64_t b = splitmix64(s);
    s = b ^ (index * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
    return Rng(splitmix64(s));
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept { return double(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); unbiased via rejection.
  std::uint64_t uniform_below(std::uint64_t n) noexcept {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal draw (Box-Muller; the spare value is cached, so one
  /// generator instance always consumes uniforms in a fixed pattern).
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the logarithm is finite.
    const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  void reseed(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : s_) w = splitmix64(s);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // avoid the fixed point
  }

  static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4] = {};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Draws a simple random sample without replacement of k indices from
/// {0, ..., n_pop-1} (Floyd's algorithm) and returns them sorted ascending,
/// so downstream accumulation order is deterministic.
inline void sample_wor(Rng& rng, std::size_t n_pop, std::size_t k,
                       std::vector<std::size_t>& out) {
  out.clear();
  if (k == n_pop) {
    out.resize(n_pop);
    for (std::size_t i = 0; i < n_pop; ++i) out[i] = i;
    return;
  }
  out.reserve(k);
  std::unordered_set<std::size_t> seen;
  seen.reserve(k * 2);
  for (std::size_t j = n_pop - k; j < n_pop; ++j) {
    const std::size_t t = std::size_t(rng.uniform_below(j + 1));
    if (seen.insert(t).second) {
      out.push_back(t);
    } else {
      seen.insert(j);
      out.push_back(j);
    }
  }
  std::sort(out.begin(), out.end());
}

}  // namespace svykit
