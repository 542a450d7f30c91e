#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace unida {

// Deterministic random source used everywhere in this project.
//
// Generator: xoshiro256++ (Blackman & Vigna), state seeded by iterating
// splitmix64 over the user seed. Normal variates come from Box-Muller on
// 53-bit uniforms. Identical seeds give identical draw sequences on any
// platform; none of the std:: distributions are used because their output
// is implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  std::uint64_t seed() const { return seed_; }

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

  // Uniform in [0, 1), 53 mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0. Rejection-free modulo is fine
  // at the batch sizes used here; the bias is < 2^-53 of a draw.
  std::uint64_t uniform_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; the second variate of each pair is
  // cached, so normals interleaved with uniforms stay reproducible.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Child stream: derived from the ORIGINAL seed and a stream id, not from
  // the current position, so the split rule is stable no matter how much
  // the parent has drawn. Used for the per-concern streams in training and
  // the per-cell streams in sweeps.
  SeededRng split(std::uint64_t stream_id) const {
    std::uint64_t x = seed_ ^ (0x9E3779B97F4A7C15ULL * (stream_id + 1));
    return SeededRng(splitmix64(x));
  }

  // Convenience: named stream ids via FNV-1a over the tag.
  SeededRng split(std::string_view tag) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : tag) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    return split(h);
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t state_[4];
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace unida
