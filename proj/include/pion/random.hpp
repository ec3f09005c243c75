#pragma once

// Portable, bit-reproducible random streams. std::normal_distribution is
// implementation-defined, so the Gaussian sampler is written out here:
// xoshiro256** state seeded by splitmix64, Box-Muller pairs.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "pion/linalg.hpp"

namespace pion {

/// splitmix64, used to expand a 64-bit seed into xoshiro state.
inline std::uint64_t splitmix64(std::uint64_t& x) noexcept {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Xoshiro256 {
public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& w : s_) {
      w = splitmix64(sm);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 == 0.0) {
      u1 = uniform();
    }
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

private:
  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Entries i.i.d. N(0, stddev²), filled row-major.
[[nodiscard]] inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Xoshiro256& rng,
                                            double stddev = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.data()) {
    x = stddev * rng.normal();
  }
  return m;
}

/// Random skew-symmetric matrix, upper triangle N(0, stddev²).
[[nodiscard]] inline Matrix random_skew(std::size_t n, Xoshiro256& rng, double stddev = 1.0) {
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = stddev * rng.normal();
      s(i, j) = v;
      s(j, i) = -v;
    }
  }
  return s;
}

/// Random orthogonal matrix as the Cayley image of a random skew matrix.
[[nodiscard]] inline Matrix random_orthogonal(std::size_t n, Xoshiro256& rng) {
  return exp_cayley(random_skew(n, rng));
}

} // namespace pion
