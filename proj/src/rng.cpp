#include "chaoslab/rng.hpp"

#include <cmath>
#include <numbers>

namespace chaoslab {

namespace {

// Uniform in (0, 1] from the top 53 bits.
double to_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

}  // namespace

Vec2 counter_normal2(std::uint64_t seed, std::uint64_t stream, std::uint64_t step) {
  const std::uint64_t key = splitmix64(splitmix64(splitmix64(seed) + stream) + step);
  const double u1 = to_unit(splitmix64(key));
  const double u2 = to_unit(splitmix64(key + 1));
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace chaoslab
