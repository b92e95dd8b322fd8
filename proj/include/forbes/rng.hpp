#pragma once

#include <cstdint>

#include "forbes/params.hpp"

namespace forbes {

// SplitMix64. Every random draw in the project flows through this so that a
// seed fully determines a run.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

 private:
  std::uint64_t state_;
};

// Draws a fresh parameter set. Fixed families are pinned to 1. Boxed free
// families are uniform over their registry ranges, except color scaling,
// which picks brighten/darken with probability 1/2 and then a factor
// u ~ U(1, theta_max), storing u or 1/u. Composing weights are raw U(0, 1).
//
// Draw order (one uniform01 per scalar, bit before factor for color):
// warp grid points row-major with x before y; theta5, theta7, theta8 block
// row-major with channels R,G,B; phi1 then phi2 block row-major, R,G,B,
// weight 0..2.
ParameterSet init_parameters(const BlockGrid& grid, std::uint64_t seed,
                             const TransformRegistry& reg);
ParameterSet init_parameters(const BlockGrid& grid, std::uint64_t seed);

// Smooth low-frequency test image: per channel, a few random sinusoidal
// plaids around mid-gray, clamped to [0.05, 0.95] so nothing saturates.
Image synth_image(int rows, int cols, std::uint64_t seed);

}  // namespace forbes
