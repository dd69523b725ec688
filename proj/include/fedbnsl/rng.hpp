#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fedbnsl {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}
}  // namespace detail

// Every consumer of randomness gets its own (purpose, stream) pair derived
// from one master seed, so participants can be simulated in any order, or
// added/removed, without perturbing anyone else's draws.
enum class RngPurpose : std::uint64_t {
  kGraph = 1,
  kWeights = 2,
  kHeteroWeights = 3,
  kSemNoise = 4,
  kDpSolver = 5,
  kCovarianceNoise = 6,
  kShuffle = 7,
  kSmoothness = 8,
  kTest = 99,
};

// All transforms are hand-rolled (no std distributions) so that equal seeds
// give bit-identical sequences on any compiler and platform.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, RngPurpose purpose, std::uint64_t stream_id = 0) {
    std::uint64_t s = master_seed;
    detail::splitmix64(s);
    s ^= (static_cast<std::uint64_t>(purpose) + 0x9e37u) * 0xff51afd7ed558ccdull;
    detail::splitmix64(s);
    s ^= (stream_id + 0xda3eu) * 0xc4ceb9fe1a85ec53ull;
    gen_.seed(detail::splitmix64(s));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on the open interval (0, 1); never returns an endpoint.
  double uniform01() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller without pair caching: two draws per sample, streams stay aligned.
  double standard_normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Unbiased integer in [0, n) by rejection.
  std::size_t uniform_index(std::size_t n) {
    assert(n > 0);
    const std::uint64_t un = n;
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % un + 1) % un;
    std::uint64_t x = next_u64();
    while (x > limit) x = next_u64();
    return static_cast<std::size_t>(x % un);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace fedbnsl
