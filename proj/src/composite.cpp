#include "forbes/composite.hpp"

#include <cmath>

#include "forbes/errors.hpp"

namespace forbes {

Vec3 softmax3(const Vec3& raw) {
  const Scalar m = raw.maxCoeff();
  Vec3 e;
  for (int k = 0; k < 3; ++k) e[k] = std::exp(raw[k] - m);
  return e / e.sum();
}

TripleField normalize_weights(const TripleField& raw) {
  const int m = static_cast<int>(raw.w[0][0].rows());
  const int n = static_cast<int>(raw.w[0][0].cols());
  TripleField out = make_triple_field(m, n, 0.0);
  for (int c = 0; c < 3; ++c)
    for (int bi = 0; bi < m; ++bi)
      for (int bj = 0; bj < n; ++bj) {
        const Vec3 nb = softmax3(Vec3(raw.w[0][static_cast<size_t>(c)](bi, bj),
                                      raw.w[1][static_cast<size_t>(c)](bi, bj),
                                      raw.w[2][static_cast<size_t>(c)](bi, bj)));
        for (int k = 0; k < 3; ++k)
          out.w[static_cast<size_t>(k)][static_cast<size_t>(c)](bi, bj) = nb[k];
      }
  return out;
}

namespace {

// out_block = sum_k weights[k] * parts[k]_block, per (block, channel).
Image combine_blockwise(const BlockGrid& grid, const TripleField& weights,
                        const Image* parts[3]) {
  Image out(grid.image_rows, grid.image_cols);
  for (int c = 0; c < 3; ++c)
    for (int bi = 0; bi < grid.block_rows; ++bi)
      for (int bj = 0; bj < grid.block_cols; ++bj) {
        auto blk = out.chan[static_cast<size_t>(c)].block(
            grid.row_offset[bi], grid.col_offset[bj], grid.row_extent[bi],
            grid.col_extent[bj]);
        blk.setZero();
        for (int k = 0; k < 3; ++k)
          blk += weights.w[static_cast<size_t>(k)][static_cast<size_t>(c)](bi, bj) *
                 parts[k]->chan[static_cast<size_t>(c)].block(
                     grid.row_offset[bi], grid.col_offset[bj], grid.row_extent[bi],
                     grid.col_extent[bj]);
      }
  return out;
}

}  // namespace

PipelineTrace forward(const Image& img, const BlockGrid& grid,
                      const ParameterSet& p, const StageOptions& stages) {
  if (img.rows != grid.image_rows || img.cols != grid.image_cols)
    throw DimensionError("grid does not match image");
  if (p.block_rows != grid.block_rows || p.block_cols != grid.block_cols)
    throw DimensionError("parameter set does not match grid");

  PipelineTrace t;
  t.grid = grid;
  t.stages = stages;
  t.input = img;

  if (stages.averaging) {
    t.avg1 = blend_blockwise(img, f1_mosaic(img, grid), grid, p.theta1);
    t.avg2 = blend_blockwise(img, f2_horizontal_mean(img), grid, p.theta2);
    t.avg3 = blend_blockwise(img, f3_vertical_mean(img), grid, p.theta3);
    t.wbar_avg = normalize_weights(p.phi1);
    const Image* parts[3] = {&t.avg1, &t.avg2, &t.avg3};
    t.i_avg = combine_blockwise(grid, t.wbar_avg, parts);
  } else {
    t.i_avg = img;
  }

  if (stages.warping) {
    t.samples = warp_sample_coords(grid, p.warp_x, p.warp_y);
    t.i_warped = f4_warp_from_samples(t.i_avg, t.samples);
  } else {
    t.i_warped = t.i_avg;
  }

  if (stages.noising) {
    t.noise5 = f5_sinusoid(grid, p.theta5);
    t.noise6 = f6_checkerboard(grid, p.theta6);
    t.noise7 = f7_speckle(grid, p.theta7);
    t.wbar_noise = normalize_weights(p.phi2);
    const Image* parts[3] = {&t.noise5, &t.noise6, &t.noise7};
    Image weighted = combine_blockwise(grid, t.wbar_noise, parts);
    t.i_noi = t.i_warped;
    for (int c = 0; c < 3; ++c)
      t.i_noi.chan[static_cast<size_t>(c)] += weighted.chan[static_cast<size_t>(c)];
  } else {
    t.i_noi = t.i_warped;
  }

  if (stages.scaling) {
    t.i_out = f8_color_scale(t.i_noi, grid, p.theta8);
  } else {
    t.i_out = t.i_noi;
  }

  if (stages.clamp_in_forward) {
    t.out_preclamp = t.i_out;
    t.i_out = clamp01(t.i_out);
  }

  if (!all_finite(t.i_out))
    throw Error("pipeline produced a non-finite value");
  return t;
}

Image render(const PipelineTrace& trace) { return clamp01(trace.i_out); }

}  // namespace forbes
