#include "forbes/image.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "forbes/errors.hpp"

namespace forbes {

Image::Image(int height, int width) : rows(height), cols(width) {
  if (height <= 0 || width <= 0)
    throw DimensionError("image dimensions must be positive");
  for (auto& c : chan) c = Array2D::Zero(height, width);
}

Image Image::constant(int height, int width, Scalar value) {
  Image img(height, width);
  for (auto& c : img.chan) c.setConstant(value);
  return img;
}

BlockGrid make_grid(int image_rows, int image_cols, int block_rows, int block_cols) {
  if (image_rows <= 0 || image_cols <= 0)
    throw DimensionError("grid needs a non-empty raster");
  if (block_rows < 1 || block_cols < 1 || block_rows > image_rows || block_cols > image_cols)
    throw DimensionError("block counts must be in [1, image extent]: got " +
                         std::to_string(block_rows) + "x" + std::to_string(block_cols) +
                         " over " + std::to_string(image_rows) + "x" +
                         std::to_string(image_cols));

  BlockGrid g;
  g.image_rows = image_rows;
  g.image_cols = image_cols;
  g.block_rows = block_rows;
  g.block_cols = block_cols;
  g.row_extent.resize(block_rows);
  g.col_extent.resize(block_cols);
  g.row_offset.resize(block_rows + 1);
  g.col_offset.resize(block_cols + 1);

  const int base_r = image_rows / block_rows;
  for (int i = 0; i < block_rows; ++i)
    g.row_extent[i] = (i == block_rows - 1) ? image_rows - base_r * (block_rows - 1) : base_r;
  const int base_c = image_cols / block_cols;
  for (int j = 0; j < block_cols; ++j)
    g.col_extent[j] = (j == block_cols - 1) ? image_cols - base_c * (block_cols - 1) : base_c;

  g.row_offset[0] = 0;
  for (int i = 0; i < block_rows; ++i) g.row_offset[i + 1] = g.row_offset[i] + g.row_extent[i];
  g.col_offset[0] = 0;
  for (int j = 0; j < block_cols; ++j) g.col_offset[j + 1] = g.col_offset[j] + g.col_extent[j];
  return g;
}

Scalar block_mean(const Image& img, const BlockGrid& grid, int block_row,
                  int block_col, int channel) {
  if (img.rows != grid.image_rows || img.cols != grid.image_cols)
    throw DimensionError("grid does not match image");
  if (block_row < 0 || block_row >= grid.block_rows || block_col < 0 ||
      block_col >= grid.block_cols || channel < 0 || channel > 2)
    throw DimensionError("block index out of range");
  return img.chan[static_cast<size_t>(channel)]
      .block(grid.row_offset[block_row], grid.col_offset[block_col],
             grid.row_extent[block_row], grid.col_extent[block_col])
      .mean();
}

Scalar psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("psnr needs same-shape images");
  double sum_sq = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Array2D da = a.chan[static_cast<size_t>(c)].min(1.0).max(0.0) -
                       b.chan[static_cast<size_t>(c)].min(1.0).max(0.0);
    sum_sq += (da * da).sum();
  }
  const double mse = sum_sq / (3.0 * a.rows * a.cols);
  if (mse == 0.0) return std::numeric_limits<Scalar>::infinity();
  return -10.0 * std::log10(mse);
}

Image clamp01(const Image& img) {
  Image out = img;
  for (auto& c : out.chan) c = c.min(1.0).max(0.0);
  return out;
}

bool all_finite(const Image& img) {
  for (const auto& c : img.chan)
    if (!c.allFinite()) return false;
  return true;
}

}  // namespace forbes
