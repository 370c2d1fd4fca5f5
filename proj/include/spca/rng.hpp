#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace spca {

// Deterministic splittable random generator.
//
// The core is the splitmix64 finalizer; a (seed, stream) pair selects an
// independent sequence, and the same pair produces the same draws on every
// platform.  The integer path is exact; the floating-point helpers depend
// only on IEEE-754 double arithmetic.  All experiment code derives one
// stream per logical unit of work (replication, grid cell, ...) so results
// are independent of thread scheduling.
class RngState {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static constexpr std::uint64_t finalize(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  explicit RngState(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : state_(finalize(seed ^ finalize(stream + kGolden))) {}

  // Next raw 64-bit value.
  std::uint64_t next_u64() noexcept {
    ++consumed_;
    state_ += kGolden;
    return finalize(state_);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_unit() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1]; safe as a logarithm argument.
  double next_unit_open() noexcept {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // One Box-Muller pair of independent standard normals.  Consumes exactly
  // two raw draws.
  std::pair<double, double> next_normal_pair() noexcept {
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * kPi_ * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  // Unbiased uniform integer in [0, bound) by rejection on the modulo bias
  // region.  Expected draw count is < 2 for every bound.
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0ull - bound) % bound;
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return x % bound;
    }
  }

  // Number of raw 64-bit draws consumed so far (used by draw-discipline
  // tests that pin how many random numbers an operation may use).
  std::uint64_t consumed() const noexcept { return consumed_; }

 private:
  static constexpr double kPi_ = 3.141592653589793238462643383279502884;

  std::uint64_t state_;
  std::uint64_t consumed_ = 0;
};

// Well-mixed combination of a master seed with up to two indices.  Used to
// assign every replication / grid cell its own stream so that parallel and
// resumed runs reproduce the serial output bit for bit.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t i,
                                   std::uint64_t j = 0) noexcept {
  std::uint64_t h = RngState::finalize(master + RngState::kGolden);
  h = RngState::finalize(h ^ (i + 0xD1B54A32D192ED03ull));
  h = RngState::finalize(h ^ (j + 0x8CB92BA72F3D8DD7ull));
  return h;
}

}  // namespace spca
