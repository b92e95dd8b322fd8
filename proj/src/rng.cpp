#include "forbes/rng.hpp"

#include <cmath>

#include "forbes/errors.hpp"

namespace forbes {

ParameterSet init_parameters(const BlockGrid& grid, std::uint64_t seed,
                             const TransformRegistry& reg) {
  const int m = grid.block_rows, n = grid.block_cols;
  ParameterSet p = make_parameter_set(grid);
  SplitMix64 rng(seed);

  const TransformSpec& warp = reg.get(4);
  for (int gi = 0; gi < m - 1; ++gi)
    for (int gj = 0; gj < n - 1; ++gj) {
      p.warp_x(gi, gj) = rng.uniform(warp.theta_min, warp.theta_max);
      p.warp_y(gi, gj) = rng.uniform(warp.theta_min, warp.theta_max);
    }

  const TransformSpec& sin5 = reg.get(5);
  for (int bi = 0; bi < m; ++bi)
    for (int bj = 0; bj < n; ++bj)
      for (int c = 0; c < 3; ++c)
        p.theta5[static_cast<size_t>(c)](bi, bj) = rng.uniform(sin5.theta_min, sin5.theta_max);

  const TransformSpec& spk = reg.get(7);
  for (int bi = 0; bi < m; ++bi)
    for (int bj = 0; bj < n; ++bj)
      for (int c = 0; c < 3; ++c)
        p.theta7[static_cast<size_t>(c)](bi, bj) = rng.uniform(spk.theta_min, spk.theta_max);

  const TransformSpec& col = reg.get(8);
  for (int bi = 0; bi < m; ++bi)
    for (int bj = 0; bj < n; ++bj)
      for (int c = 0; c < 3; ++c) {
        const bool brighten = rng.uniform01() < 0.5;
        const Scalar u = rng.uniform(1.0, col.theta_max);
        p.theta8[static_cast<size_t>(c)](bi, bj) = brighten ? u : 1.0 / u;
      }

  for (TripleField* phi : {&p.phi1, &p.phi2})
    for (int bi = 0; bi < m; ++bi)
      for (int bj = 0; bj < n; ++bj)
        for (int c = 0; c < 3; ++c)
          for (int k = 0; k < 3; ++k)
            phi->w[static_cast<size_t>(k)][static_cast<size_t>(c)](bi, bj) = rng.uniform01();

  return p;
}

ParameterSet init_parameters(const BlockGrid& grid, std::uint64_t seed) {
  return init_parameters(grid, seed, TransformRegistry::standard());
}

Image synth_image(int rows, int cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw DimensionError("synth image needs positive dims");
  SplitMix64 rng(seed ^ 0x53594E5449ULL);  // decouple from parameter draws
  Image img(rows, cols);
  constexpr Scalar two_pi = 6.283185307179586476925286766559;
  for (int c = 0; c < 3; ++c) {
    Array2D& ch = img.chan[static_cast<size_t>(c)];
    ch.setConstant(0.5);
    for (int k = 0; k < 3; ++k) {
      const Scalar amp = rng.uniform(0.05, 0.15);
      const Scalar fx = rng.uniform(0.5, 2.5);
      const Scalar fy = rng.uniform(0.5, 2.5);
      const Scalar phase = rng.uniform(0.0, two_pi);
      for (int r = 0; r < rows; ++r)
        for (int col = 0; col < cols; ++col)
          ch(r, col) += amp * std::sin(two_pi * (fx * col / cols + fy * r / rows) + phase);
    }
    ch = ch.min(0.95).max(0.05);
  }
  return img;
}

}  // namespace forbes
