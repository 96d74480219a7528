#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace ncg {

namespace detail {
// SplitMix64 finalizer; used to derive well-separated stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Deterministic random stream. One instance per thread/chain; never shared.
///
/// Wraps mt19937_64 with hand-rolled uniform/normal transforms so draws are a
/// pure function of the seed and the call sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Derives an independent stream from a base seed and a path of stream ids
  /// (e.g. {rep_index, method_index}); splitmix64-mixed so nearby ids decorrelate.
  static Rng stream(std::uint64_t base_seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = base_seed ^ 0x6a09e667f3bcc909ULL;
    detail::splitmix64(s);
    for (std::uint64_t id : path) {
      s ^= id + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
      detail::splitmix64(s);
    }
    return Rng(detail::splitmix64(s));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    // 53-bit mantissa; offset by half an ulp so 0 is unreachable.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (two uniforms per call, no cached spare).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ncg
