#pragma once

#include <cstdint>
#include <random>

#include "chaoslab/grid.hpp"

namespace chaoslab {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of replica `index` under `master`; a pure function of both.
constexpr std::uint64_t replica_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// Counter-based standard normal pair for (seed, stream, step): the Brownian increment
// of one particle at one step is reproducible without replaying earlier steps.
Vec2 counter_normal2(std::uint64_t seed, std::uint64_t stream, std::uint64_t step);

}  // namespace chaoslab
