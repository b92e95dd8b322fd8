#pragma once

#include <array>

#include "forbes/types.hpp"

namespace forbes {

// Planar RGB raster. Channel planes are rows x cols arrays indexed
// (row, col). Values are nominally in [0, 1] but pipeline intermediates may
// leave that range; nothing here clamps.
struct Image {
  int rows = 0;
  int cols = 0;
  std::array<Array2D, 3> chan;

  Image() = default;
  Image(int height, int width);

  static Image constant(int height, int width, Scalar value);

  bool same_shape(const Image& other) const {
    return rows == other.rows && cols == other.cols;
  }

  Scalar& operator()(int channel, int row, int col) {
    return chan[static_cast<size_t>(channel)](row, col);
  }
  Scalar operator()(int channel, int row, int col) const {
    return chan[static_cast<size_t>(channel)](row, col);
  }
};

// M x N partition of a rows x cols raster. Block row i spans
// [row_offset[i], row_offset[i+1]); every block row has floor(rows/M) pixels
// except the last, which absorbs the remainder. Block columns likewise.
struct BlockGrid {
  int image_rows = 0, image_cols = 0;
  int block_rows = 0, block_cols = 0;
  Eigen::VectorXi row_extent, col_extent;  // sizes M and N
  Eigen::VectorXi row_offset, col_offset;  // sizes M+1 and N+1, end sentinel included
};

BlockGrid make_grid(int image_rows, int image_cols, int block_rows, int block_cols);

Scalar block_mean(const Image& img, const BlockGrid& grid, int block_row,
                  int block_col, int channel);

// 10*log10(1/MSE) over all three channels, both operands clamped to [0, 1]
// first. Returns +infinity for identical clamped inputs.
Scalar psnr(const Image& a, const Image& b);

Image clamp01(const Image& img);

bool all_finite(const Image& img);

}  // namespace forbes
