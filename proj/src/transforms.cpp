#include "forbes/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "forbes/errors.hpp"

namespace forbes {

namespace {

void check_grid(const Image& img, const BlockGrid& grid) {
  if (img.rows != grid.image_rows || img.cols != grid.image_cols)
    throw DimensionError("grid does not match image");
}

void check_field(const ChannelField& f, const BlockGrid& grid) {
  for (const auto& a : f)
    if (a.rows() != grid.block_rows || a.cols() != grid.block_cols)
      throw DimensionError("channel field does not match grid");
}

}  // namespace

Image blend_blockwise(const Image& base, const Image& degraded,
                      const BlockGrid& grid, const ChannelField& theta) {
  check_grid(base, grid);
  check_grid(degraded, grid);
  check_field(theta, grid);
  Image out(base.rows, base.cols);
  for (int c = 0; c < 3; ++c)
    for (int bi = 0; bi < grid.block_rows; ++bi)
      for (int bj = 0; bj < grid.block_cols; ++bj) {
        const Scalar th = theta[static_cast<size_t>(c)](bi, bj);
        out.chan[static_cast<size_t>(c)]
            .block(grid.row_offset[bi], grid.col_offset[bj], grid.row_extent[bi],
                   grid.col_extent[bj]) =
            (1.0 - th) * base.chan[static_cast<size_t>(c)].block(
                             grid.row_offset[bi], grid.col_offset[bj],
                             grid.row_extent[bi], grid.col_extent[bj]) +
            th * degraded.chan[static_cast<size_t>(c)].block(
                     grid.row_offset[bi], grid.col_offset[bj], grid.row_extent[bi],
                     grid.col_extent[bj]);
      }
  return out;
}

Image f1_mosaic(const Image& img, const BlockGrid& grid) {
  check_grid(img, grid);
  Image out(img.rows, img.cols);
  for (int c = 0; c < 3; ++c)
    for (int bi = 0; bi < grid.block_rows; ++bi)
      for (int bj = 0; bj < grid.block_cols; ++bj)
        out.chan[static_cast<size_t>(c)]
            .block(grid.row_offset[bi], grid.col_offset[bj], grid.row_extent[bi],
                   grid.col_extent[bj])
            .setConstant(block_mean(img, grid, bi, bj, c));
  return out;
}

Image f2_horizontal_mean(const Image& img) {
  Image out(img.rows, img.cols);
  for (int c = 0; c < 3; ++c) {
    const auto row_means = img.chan[static_cast<size_t>(c)].rowwise().mean();
    out.chan[static_cast<size_t>(c)] = row_means.replicate(1, img.cols);
  }
  return out;
}

Image f3_vertical_mean(const Image& img) {
  Image out(img.rows, img.cols);
  for (int c = 0; c < 3; ++c) {
    const auto col_means = img.chan[static_cast<size_t>(c)].colwise().mean();
    out.chan[static_cast<size_t>(c)] = col_means.replicate(img.rows, 1);
  }
  return out;
}

int block_index_row(const BlockGrid& grid, int row) {
  return std::min(row / grid.row_extent[0], grid.block_rows - 1);
}

int block_index_col(const BlockGrid& grid, int col) {
  return std::min(col / grid.col_extent[0], grid.block_cols - 1);
}

LatticePos lattice_pos(const BlockGrid& grid, int row, int col) {
  LatticePos p;
  p.cell_row = block_index_row(grid, row);
  p.cell_col = block_index_col(grid, col);
  p.ty = static_cast<Scalar>(row - grid.row_offset[p.cell_row]) /
         static_cast<Scalar>(grid.row_extent[p.cell_row]);
  p.tx = static_cast<Scalar>(col - grid.col_offset[p.cell_col]) /
         static_cast<Scalar>(grid.col_extent[p.cell_col]);
  return p;
}

WarpSamples warp_sample_coords(const BlockGrid& grid, const Array2D& warp_x,
                               const Array2D& warp_y) {
  const int m = grid.block_rows, n = grid.block_cols;
  if (warp_x.rows() != m - 1 || warp_x.cols() != n - 1 || warp_y.rows() != m - 1 ||
      warp_y.cols() != n - 1)
    throw DimensionError("warp field does not match grid");

  // Inner lattice displacements in pixels; borders are zero.
  Array2D lat_dx = Array2D::Zero(m + 1, n + 1);
  Array2D lat_dy = Array2D::Zero(m + 1, n + 1);
  const Scalar ext_x = static_cast<Scalar>(grid.col_extent[0]);
  const Scalar ext_y = static_cast<Scalar>(grid.row_extent[0]);
  for (int gi = 1; gi < m; ++gi)
    for (int gj = 1; gj < n; ++gj) {
      lat_dx(gi, gj) = warp_x(gi - 1, gj - 1) * ext_x;
      lat_dy(gi, gj) = warp_y(gi - 1, gj - 1) * ext_y;
    }

  WarpSamples s;
  s.sx.resize(grid.image_rows, grid.image_cols);
  s.sy.resize(grid.image_rows, grid.image_cols);
  for (int r = 0; r < grid.image_rows; ++r)
    for (int c = 0; c < grid.image_cols; ++c) {
      const LatticePos lp = lattice_pos(grid, r, c);
      const int i = lp.cell_row, j = lp.cell_col;
      const Scalar w00 = (1.0 - lp.ty) * (1.0 - lp.tx), w01 = (1.0 - lp.ty) * lp.tx;
      const Scalar w10 = lp.ty * (1.0 - lp.tx), w11 = lp.ty * lp.tx;
      const Scalar dx = w00 * lat_dx(i, j) + w01 * lat_dx(i, j + 1) +
                        w10 * lat_dx(i + 1, j) + w11 * lat_dx(i + 1, j + 1);
      const Scalar dy = w00 * lat_dy(i, j) + w01 * lat_dy(i, j + 1) +
                        w10 * lat_dy(i + 1, j) + w11 * lat_dy(i + 1, j + 1);
      s.sx(r, c) = static_cast<Scalar>(c) - dx;
      s.sy(r, c) = static_cast<Scalar>(r) - dy;
    }
  return s;
}

Image f4_warp_from_samples(const Image& img, const WarpSamples& s) {
  if (s.sx.rows() != img.rows || s.sx.cols() != img.cols)
    throw DimensionError("warp samples do not match image");
  Image out(img.rows, img.cols);
  const int h = img.rows, w = img.cols;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Scalar sx = std::fmin(static_cast<Scalar>(w - 1), std::fmax(0.0, s.sx(r, c)));
      const Scalar sy = std::fmin(static_cast<Scalar>(h - 1), std::fmax(0.0, s.sy(r, c)));
      const int x0 = std::max(0, std::min(static_cast<int>(std::floor(sx)), w - 2));
      const int y0 = std::max(0, std::min(static_cast<int>(std::floor(sy)), h - 2));
      const Scalar fx = sx - x0, fy = sy - y0;
      for (int ch = 0; ch < 3; ++ch) {
        const Array2D& a = img.chan[static_cast<size_t>(ch)];
        out(ch, r, c) = (1.0 - fy) * ((1.0 - fx) * a(y0, x0) + fx * a(y0, x0 + 1)) +
                        fy * ((1.0 - fx) * a(y0 + 1, x0) + fx * a(y0 + 1, x0 + 1));
      }
    }
  return out;
}

Image f4_warp(const Image& img, const BlockGrid& grid, const Array2D& warp_x,
              const Array2D& warp_y) {
  check_grid(img, grid);
  return f4_warp_from_samples(img, warp_sample_coords(grid, warp_x, warp_y));
}

NoiseMap f5_sinusoid(const BlockGrid& grid, const ChannelField& theta) {
  check_field(theta, grid);
  NoiseMap out(grid.image_rows, grid.image_cols);
  for (int c = 0; c < 3; ++c)
    for (int bi = 0; bi < grid.block_rows; ++bi)
      for (int bj = 0; bj < grid.block_cols; ++bj) {
        const Scalar th = theta[static_cast<size_t>(c)](bi, bj);
        const Scalar period =
            static_cast<Scalar>(std::min(grid.row_extent[bi], grid.col_extent[bj])) / 4.0;
        const Scalar cth = std::cos(th), sth = std::sin(th);
        const Scalar freq = 2.0 * M_PI / period;
        for (int r = 0; r < grid.row_extent[bi]; ++r)
          for (int cc = 0; cc < grid.col_extent[bj]; ++cc)
            out(c, grid.row_offset[bi] + r, grid.col_offset[bj] + cc) =
                0.2 * std::sin(freq * (cc * cth + r * sth));
      }
  return out;
}

namespace {

// Index of the quarter cell containing offset o in a length-4 split where
// the first three cells get floor(extent / 4) and the last the remainder.
inline int quarter_cell(int o, int extent) {
  const int q = extent / 4;
  if (q == 0) return 3;
  return std::min(o / q, 3);
}

}  // namespace

NoiseMap f6_checkerboard(const BlockGrid& grid, const ChannelField& theta) {
  check_field(theta, grid);
  NoiseMap out(grid.image_rows, grid.image_cols);
  for (int c = 0; c < 3; ++c)
    for (int bi = 0; bi < grid.block_rows; ++bi)
      for (int bj = 0; bj < grid.block_cols; ++bj) {
        const Scalar amp = 0.3 * theta[static_cast<size_t>(c)](bi, bj);
        for (int r = 0; r < grid.row_extent[bi]; ++r) {
          const int ci = quarter_cell(r, grid.row_extent[bi]);
          for (int cc = 0; cc < grid.col_extent[bj]; ++cc) {
            const int cj = quarter_cell(cc, grid.col_extent[bj]);
            out(c, grid.row_offset[bi] + r, grid.col_offset[bj] + cc) =
                ((ci + cj) % 2 == 0) ? amp : -amp;
          }
        }
      }
  return out;
}

std::vector<int> block_center_rows(const BlockGrid& grid) {
  std::vector<int> centers(static_cast<size_t>(grid.block_rows));
  for (int bi = 0; bi < grid.block_rows; ++bi)
    centers[static_cast<size_t>(bi)] = grid.row_offset[bi] + (grid.row_extent[bi] - 1) / 2;
  return centers;
}

std::vector<int> block_center_cols(const BlockGrid& grid) {
  std::vector<int> centers(static_cast<size_t>(grid.block_cols));
  for (int bj = 0; bj < grid.block_cols; ++bj)
    centers[static_cast<size_t>(bj)] = grid.col_offset[bj] + (grid.col_extent[bj] - 1) / 2;
  return centers;
}

AxisInterp axis_interp(int extent, const std::vector<int>& centers) {
  AxisInterp ai;
  ai.seg.resize(static_cast<size_t>(extent), 0);
  ai.t.resize(static_cast<size_t>(extent), 0.0);
  if (centers.size() < 2) return ai;  // single center: constant along the axis
  for (int x = 0; x < extent; ++x) {
    if (x <= centers.front()) {
      ai.seg[static_cast<size_t>(x)] = 0;
      ai.t[static_cast<size_t>(x)] = 0.0;
    } else if (x >= centers.back()) {
      ai.seg[static_cast<size_t>(x)] = static_cast<int>(centers.size()) - 2;
      ai.t[static_cast<size_t>(x)] = 1.0;
    } else {
      int s = 0;
      while (x >= centers[static_cast<size_t>(s + 1)]) ++s;
      ai.seg[static_cast<size_t>(x)] = s;
      ai.t[static_cast<size_t>(x)] =
          static_cast<Scalar>(x - centers[static_cast<size_t>(s)]) /
          static_cast<Scalar>(centers[static_cast<size_t>(s + 1)] - centers[static_cast<size_t>(s)]);
    }
  }
  return ai;
}

NoiseMap f7_speckle(const BlockGrid& grid, const ChannelField& theta) {
  check_field(theta, grid);
  const AxisInterp ry = axis_interp(grid.image_rows, block_center_rows(grid));
  const AxisInterp rx = axis_interp(grid.image_cols, block_center_cols(grid));
  NoiseMap out(grid.image_rows, grid.image_cols);
  for (int c = 0; c < 3; ++c) {
    const Array2D& th = theta[static_cast<size_t>(c)];
    for (int r = 0; r < grid.image_rows; ++r) {
      const int i = ry.seg[static_cast<size_t>(r)];
      const Scalar ty = ry.t[static_cast<size_t>(r)];
      const int i1 = std::min(i + 1, grid.block_rows - 1);
      for (int cc = 0; cc < grid.image_cols; ++cc) {
        const int j = rx.seg[static_cast<size_t>(cc)];
        const Scalar tx = rx.t[static_cast<size_t>(cc)];
        const int j1 = std::min(j + 1, grid.block_cols - 1);
        out(c, r, cc) = (1.0 - ty) * ((1.0 - tx) * th(i, j) + tx * th(i, j1)) +
                        ty * ((1.0 - tx) * th(i1, j) + tx * th(i1, j1));
      }
    }
  }
  return out;
}

Image f8_color_scale(const Image& img, const BlockGrid& grid, const ChannelField& theta) {
  check_grid(img, grid);
  check_field(theta, grid);
  Image out(img.rows, img.cols);
  for (int c = 0; c < 3; ++c)
    for (int bi = 0; bi < grid.block_rows; ++bi)
      for (int bj = 0; bj < grid.block_cols; ++bj)
        out.chan[static_cast<size_t>(c)]
            .block(grid.row_offset[bi], grid.col_offset[bj], grid.row_extent[bi],
                   grid.col_extent[bj]) =
            theta[static_cast<size_t>(c)](bi, bj) *
            img.chan[static_cast<size_t>(c)].block(grid.row_offset[bi], grid.col_offset[bj],
                                                   grid.row_extent[bi], grid.col_extent[bj]);
  return out;
}

}  // namespace forbes
