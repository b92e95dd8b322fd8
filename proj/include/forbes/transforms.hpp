#pragma once

#include <vector>

#include "forbes/image.hpp"
#include "forbes/params.hpp"

namespace forbes {

// A noise map has image shape but holds additive offsets, not intensities.
using NoiseMap = Image;

// Blockwise convex blend (1 - theta) * base + theta * degraded, theta per
// (block, channel). Both operands must share the grid's raster shape.
Image blend_blockwise(const Image& base, const Image& degraded,
                      const BlockGrid& grid, const ChannelField& theta);

// f1: every block becomes its per-channel mean. Idempotent.
Image f1_mosaic(const Image& img, const BlockGrid& grid);

// f2: every pixel becomes its full-row mean per channel.
Image f2_horizontal_mean(const Image& img);

// f3: every pixel becomes its full-column mean per channel.
Image f3_vertical_mean(const Image& img);

// Backward warp geometry. The control lattice sits on block boundaries,
// (M+1) x (N+1) points; inner points carry displacement
// (theta_x * dx, theta_y * dy) with dx, dy the regular block extents, border
// points stay fixed. The displacement field is bilinear between lattice
// points, and output pixels sample the source at position minus
// displacement with border-clamped bilinear interpolation.
struct WarpSamples {
  Array2D sx, sy;  // raw (unclamped) source coordinates per output pixel
};

WarpSamples warp_sample_coords(const BlockGrid& grid, const Array2D& warp_x,
                               const Array2D& warp_y);

Image f4_warp_from_samples(const Image& img, const WarpSamples& s);

// f4 end to end: compute sample coordinates, then resample.
Image f4_warp(const Image& img, const BlockGrid& grid, const Array2D& warp_x,
              const Array2D& warp_y);

// f5: per block and channel, a sinusoid of amplitude 0.2 along direction
// theta, period min(block extents) / 4, phase zero at the block's top-left
// pixel.
NoiseMap f5_sinusoid(const BlockGrid& grid, const ChannelField& theta);

// f6: per block, a 4x4 checkerboard of cells valued +-0.3 * theta, top-left
// cell positive; cell extents follow the same floor/remainder split as the
// block grid.
NoiseMap f6_checkerboard(const BlockGrid& grid, const ChannelField& theta);

// f7: theta lives at block center pixels; everything in between is
// bilinearly interpolated over the center lattice, clamped beyond the
// outermost centers.
NoiseMap f7_speckle(const BlockGrid& grid, const ChannelField& theta);

// f8: multiply each block by its per-channel scale factor.
Image f8_color_scale(const Image& img, const BlockGrid& grid, const ChannelField& theta);

// Shared geometry --------------------------------------------------------

// Which lattice cell a pixel falls in and its interpolation fractions; the
// cell (i, j) spans lattice corners (i, j) .. (i+1, j+1).
struct LatticePos {
  int cell_row = 0, cell_col = 0;
  Scalar ty = 0, tx = 0;
};
LatticePos lattice_pos(const BlockGrid& grid, int row, int col);

// Block index containing a pixel coordinate.
int block_index_row(const BlockGrid& grid, int row);
int block_index_col(const BlockGrid& grid, int col);

// Center pixel coordinates of every block row / column.
std::vector<int> block_center_rows(const BlockGrid& grid);
std::vector<int> block_center_cols(const BlockGrid& grid);

// Per-coordinate interpolation over a strictly increasing center list:
// value(x) = (1 - t) * v[seg] + t * v[seg + 1], with t clamped to [0, 1]
// outside the span. For a single center, seg = 0 and t = 0 everywhere.
struct AxisInterp {
  std::vector<int> seg;
  std::vector<Scalar> t;
};
AxisInterp axis_interp(int extent, const std::vector<int>& centers);

}  // namespace forbes
