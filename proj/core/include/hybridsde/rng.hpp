#ifndef HYBRIDSDE_RNG_HPP
#define HYBRIDSDE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace hybridsde {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Identifies one substream: (master seed, path index, stream role).
/// Streams for the Brownian driver, the jump driver, and the switching clocks
/// are independent by construction.
struct SeedLineage {
  std::uint64_t master = 0;
  std::uint64_t path = 0;
  std::uint64_t stream = 0;
};

enum class StreamRole : std::uint64_t { Brownian = 0, Jump = 1, Clock = 2 };

/// xoshiro256++ keyed by hashing the lineage through splitmix64.  Counter-based
/// splitting: any (master, path, stream) triple yields a statistically
/// independent stream, so path workers never share generator state.
class RngStream {
 public:
  RngStream() : RngStream(SeedLineage{}) {}

  explicit RngStream(SeedLineage lineage) : lineage_(lineage) {
    std::uint64_t s = lineage.master;
    s ^= 0x6a09e667f3bcc908ULL + splitmix64(s);
    s += lineage.path * 0xd1b54a32d192ed03ULL;
    s ^= lineage.stream * 0x8cb92ba72f3d8dd7ULL;
    for (auto& w : state_) w = splitmix64(s);
  }

  static RngStream derive(std::uint64_t master, std::uint64_t path, StreamRole role) {
    return RngStream(SeedLineage{master, path, static_cast<std::uint64_t>(role)});
  }

  const SeedLineage& lineage() const { return lineage_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in (0, 1): 53-bit mantissa, never exactly 0.
  double u01() {
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Marsaglia polar; one spare cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * u01() - 1.0;
      v = 2.0 * u01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double exponential(double rate = 1.0) { return -std::log(u01()) / rate; }

  /// Exact Poisson count by exponential inter-arrival summation.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::uint64_t n = 0;
    double acc = exponential();
    while (acc <= mean) {
      ++n;
      acc += exponential();
    }
    return n;
  }

  /// Index in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(u01() * static_cast<double>(n)) % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  SeedLineage lineage_;
  std::uint64_t state_[4] = {};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hybridsde

#endif
