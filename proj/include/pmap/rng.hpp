#pragma once
// Seedable random streams with a stable cross-platform bit sequence.
//
// Streams are std::mt19937_64, whose output sequence is fixed by the C++
// standard. Conversion to floating point is done explicitly here (never via
// std::uniform_real_distribution, which is implementation-defined), so every
// randomized operation in this library is a pure function of its seed.
//
// Child seeds for independent work items (draw j, level/prefix, example k)
// come from a SplitMix64 hash chain, never from sequential draws of a parent
// stream, so parallel work items are reproducible in isolation.

#include <cmath>
#include <cstdint>
#include <random>

namespace pmap {

// Euler-Mascheroni constant, 20 significant digits. The Gumbel perturbations
// are shifted by this amount so their population mean is zero.
inline constexpr double kEulerGamma = 0.57721566490153286061;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) {
  return splitmix64(seed ^ splitmix64(a + 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b) {
  return derive_seed(derive_seed(seed, a), b);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b, std::uint64_t c) {
  return derive_seed(derive_seed(seed, a, b), c);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Zero-mean Gumbel via inverse CDF, F(t) = exp(-exp(-(t + c))).
  // U = 0 (and the unreachable U = 1) is rejected and redrawn so samples
  // stay finite.
  double gumbel() {
    double u = uniform01();
    while (u == 0.0 || u == 1.0) u = uniform01();
    return -kEulerGamma - std::log(-std::log(u));
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace pmap
