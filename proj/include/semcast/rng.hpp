#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

namespace semcast {

/// Deterministic splittable RNG built on splitmix64.
///
/// Contract: identical seed plus identical call sequence yields an identical
/// stream, independent of platform and standard library. Sub-streams for the
/// different stochastic modules are derived with derive(tag) so that parallel
/// or reordered stages stay reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Derive an independent sub-stream keyed by a domain-separation tag.
  [[nodiscard]] Rng derive(std::string_view tag) const {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a offset basis
    for (unsigned char c : tag) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return Rng(mix(state_ ^ h));
  }

  /// Derive a sub-stream keyed by an index (e.g. per-frame seeds).
  [[nodiscard]] Rng derive(std::uint64_t index) const {
    return Rng(mix(state_ ^ (0x9e3779b97f4a7c15ull + index)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix_out(state_);
  }

  /// Uniform draw in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Integer draw in [0, n).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller (cosine branch, no cached state).
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  Eigen::ArrayXd normal_array(Eigen::Index n) {
    Eigen::ArrayXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = normal();
    return out;
  }

  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = normal();
    return out;
  }

 private:
  static std::uint64_t mix_out(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  static std::uint64_t mix(std::uint64_t z) { return mix_out(z + 0x9e3779b97f4a7c15ull); }

  std::uint64_t state_;
};

/// 64-bit seed value used across every stochastic module.
struct RngSeed {
  std::uint64_t seed = 0;
};

}  // namespace semcast
