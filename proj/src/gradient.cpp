#include "forbes/gradient.hpp"

#include <cmath>

#include "forbes/errors.hpp"

namespace forbes {

namespace {

// Flat index helpers into the layout segments.
inline int field_index(const FamilySegment& s, int n, int bi, int bj, int c) {
  return s.offset + (bi * n + bj) * 3 + c;
}
inline int triple_index(const FamilySegment& s, int n, int bi, int bj, int c, int k) {
  return s.offset + ((bi * n + bj) * 3 + c) * 3 + k;
}
inline int warp_index(const FamilySegment& s, int n, int gi, int gj, int axis) {
  return s.offset + (gi * (n - 1) + gj) * 2 + axis;
}

Scalar block_dot(const Array2D& a, const Array2D& b, const BlockGrid& g, int bi, int bj) {
  return (a.block(g.row_offset[bi], g.col_offset[bj], g.row_extent[bi], g.col_extent[bj]) *
          b.block(g.row_offset[bi], g.col_offset[bj], g.row_extent[bi], g.col_extent[bj]))
      .sum();
}

// Chain rule through a blockwise softmax: given s_k = dE/d(wbar_k), add
// dE/d(raw phi_k) for all three raw weights of one (block, channel).
void add_softmax_pull(VecX& grad, const FamilySegment& seg, int n, int bi, int bj,
                      int c, const Vec3& wbar, const Vec3& s) {
  const Scalar mix = wbar.dot(s);
  for (int k = 0; k < 3; ++k)
    grad[triple_index(seg, n, bi, bj, c, k)] += wbar[k] * (s[k] - mix);
}

}  // namespace

VecX backward(const PipelineTrace& t, const ParameterSet& p, const VecX& v,
              const ParamLayout& L, ExtractorList& extractors,
              const std::vector<FeatureVector>& feats_in,
              const std::vector<FeatureVector>& feats_out, const EnergyFlags& flags,
              const std::vector<Scalar>& weights) {
  const BlockGrid& g = t.grid;
  const int m = g.block_rows, n = g.block_cols;
  const int h = g.image_rows, w = g.image_cols;

  VecX grad = VecX::Zero(L.size);
  if (flags.u) add_energy_u_grad(v, L, grad);
  if (flags.c) add_energy_c_grad(v, L, grad);
  if (!flags.md() || extractors.empty()) return grad;

  if (feats_in.size() != extractors.size() || feats_out.size() != extractors.size())
    throw DimensionError("feature cache does not match extractor list");

  // Seed the image-space gradient from every extractor.
  Image gimg(h, w);
  for (size_t k = 0; k < extractors.size(); ++k) {
    const Scalar wk = weights.empty() ? 1.0 : weights[k];
    const VecX seed = md_seed(feats_out[k], feats_in[k], flags.d, flags.s, wk);
    if (seed.isZero(0.0)) continue;
    const Image gk = extractors[k]->extract_vjp(t.i_out, seed);
    for (int c = 0; c < 3; ++c)
      gimg.chan[static_cast<size_t>(c)] += gk.chan[static_cast<size_t>(c)];
  }

  // In-forward clamping saturates; only pixels inside [0, 1] pass gradient.
  if (t.stages.clamp_in_forward) {
    for (int c = 0; c < 3; ++c) {
      const Array2D& pre = t.out_preclamp.chan[static_cast<size_t>(c)];
      Array2D& gc = gimg.chan[static_cast<size_t>(c)];
      gc = (pre >= 0.0 && pre <= 1.0).select(gc, Array2D::Zero(h, w));
    }
  }

  // Scaling: out = theta8 * noi per (block, channel).
  Image gnoi(h, w);
  if (t.stages.scaling) {
    const FamilySegment& scale_seg = L.seg[kColorScale];
    for (int c = 0; c < 3; ++c)
      for (int bi = 0; bi < m; ++bi)
        for (int bj = 0; bj < n; ++bj) {
          grad[field_index(scale_seg, n, bi, bj, c)] +=
              block_dot(gimg.chan[static_cast<size_t>(c)],
                        t.i_noi.chan[static_cast<size_t>(c)], g, bi, bj);
          gnoi.chan[static_cast<size_t>(c)]
              .block(g.row_offset[bi], g.col_offset[bj], g.row_extent[bi], g.col_extent[bj]) =
              p.theta8[static_cast<size_t>(c)](bi, bj) *
              gimg.chan[static_cast<size_t>(c)].block(g.row_offset[bi], g.col_offset[bj],
                                                      g.row_extent[bi], g.col_extent[bj]);
        }
  } else {
    gnoi = gimg;
  }

  // Noising: noi = warped + wbar5 * N5 + wbar6 * N6 + wbar7 * N7, blockwise.
  Image gwarped = gnoi;  // the warped image enters with coefficient one
  if (t.stages.noising) {
    const FamilySegment& sin_seg = L.seg[kSinusoid];
    const FamilySegment& phi2_seg = L.seg[kComposeNoise];
    for (int c = 0; c < 3; ++c)
      for (int bi = 0; bi < m; ++bi)
        for (int bj = 0; bj < n; ++bj) {
          const Array2D& gc = gnoi.chan[static_cast<size_t>(c)];
          Vec3 s;
          s[0] = block_dot(gc, t.noise5.chan[static_cast<size_t>(c)], g, bi, bj);
          s[1] = block_dot(gc, t.noise6.chan[static_cast<size_t>(c)], g, bi, bj);
          s[2] = block_dot(gc, t.noise7.chan[static_cast<size_t>(c)], g, bi, bj);
          const Vec3 wbar(t.wbar_noise.w[0][static_cast<size_t>(c)](bi, bj),
                          t.wbar_noise.w[1][static_cast<size_t>(c)](bi, bj),
                          t.wbar_noise.w[2][static_cast<size_t>(c)](bi, bj));
          add_softmax_pull(grad, phi2_seg, n, bi, bj, c, wbar, s);

          // Sinusoid angle: d/d theta of 0.2 sin(freq (x cos + y sin)).
          const Scalar th = p.theta5[static_cast<size_t>(c)](bi, bj);
          const Scalar period =
              static_cast<Scalar>(std::min(g.row_extent[bi], g.col_extent[bj])) / 4.0;
          const Scalar freq = 2.0 * M_PI / period;
          const Scalar cth = std::cos(th), sth = std::sin(th);
          Scalar acc = 0;
          for (int r = 0; r < g.row_extent[bi]; ++r)
            for (int cc = 0; cc < g.col_extent[bj]; ++cc) {
              const Scalar u = cc * cth + r * sth;
              acc += gc(g.row_offset[bi] + r, g.col_offset[bj] + cc) * 0.2 *
                     std::cos(freq * u) * freq * (-cc * sth + r * cth);
            }
          grad[field_index(sin_seg, n, bi, bj, c)] += wbar[0] * acc;
        }

    // Speckle magnitudes: N7 is linear in the center values; scatter each
    // pixel's interpolation weights back to its (up to) four centers,
    // scaled by the pixel's own block weight wbar7.
    const FamilySegment& spk_seg = L.seg[kSpeckle];
    const AxisInterp ry = axis_interp(h, block_center_rows(g));
    const AxisInterp rx = axis_interp(w, block_center_cols(g));
    for (int c = 0; c < 3; ++c) {
      const Array2D& gc = gnoi.chan[static_cast<size_t>(c)];
      for (int r = 0; r < h; ++r) {
        const int i = ry.seg[static_cast<size_t>(r)];
        const Scalar ty = ry.t[static_cast<size_t>(r)];
        const int i1 = std::min(i + 1, m - 1);
        const int bi = block_index_row(g, r);
        for (int cc = 0; cc < w; ++cc) {
          const int j = rx.seg[static_cast<size_t>(cc)];
          const Scalar tx = rx.t[static_cast<size_t>(cc)];
          const int j1 = std::min(j + 1, n - 1);
          const int bj = block_index_col(g, cc);
          const Scalar pull =
              gc(r, cc) * t.wbar_noise.w[2][static_cast<size_t>(c)](bi, bj);
          grad[field_index(spk_seg, n, i, j, c)] += pull * (1.0 - ty) * (1.0 - tx);
          grad[field_index(spk_seg, n, i, j1, c)] += pull * (1.0 - ty) * tx;
          grad[field_index(spk_seg, n, i1, j, c)] += pull * ty * (1.0 - tx);
          grad[field_index(spk_seg, n, i1, j1, c)] += pull * ty * tx;
        }
      }
    }
  }

  // Warping: scatter the sampling weights back to the averaged image and
  // pull the sample-position derivative back to the lattice displacements.
  Image gavg(h, w);
  if (t.stages.warping) {
    const FamilySegment& warp_seg = L.seg[kWarp];
    const Scalar ext_x = static_cast<Scalar>(g.col_extent[0]);
    const Scalar ext_y = static_cast<Scalar>(g.row_extent[0]);
    for (int r = 0; r < h; ++r)
      for (int cc = 0; cc < w; ++cc) {
        const Scalar sx_raw = t.samples.sx(r, cc), sy_raw = t.samples.sy(r, cc);
        const Scalar sx = std::fmin(static_cast<Scalar>(w - 1), std::fmax(0.0, sx_raw));
        const Scalar sy = std::fmin(static_cast<Scalar>(h - 1), std::fmax(0.0, sy_raw));
        const int x0 = std::max(0, std::min(static_cast<int>(std::floor(sx)), w - 2));
        const int y0 = std::max(0, std::min(static_cast<int>(std::floor(sy)), h - 2));
        const Scalar fx = sx - x0, fy = sy - y0;
        const Scalar w00 = (1.0 - fy) * (1.0 - fx), w01 = (1.0 - fy) * fx;
        const Scalar w10 = fy * (1.0 - fx), w11 = fy * fx;
        const bool x_sat = sx_raw < 0.0 || sx_raw > static_cast<Scalar>(w - 1);
        const bool y_sat = sy_raw < 0.0 || sy_raw > static_cast<Scalar>(h - 1);

        Scalar pull_x = 0, pull_y = 0;  // sum over channels of g * dI/ds
        for (int c = 0; c < 3; ++c) {
          const Scalar gw = gwarped(c, r, cc);
          Array2D& ga = gavg.chan[static_cast<size_t>(c)];
          ga(y0, x0) += w00 * gw;
          ga(y0, x0 + 1) += w01 * gw;
          ga(y0 + 1, x0) += w10 * gw;
          ga(y0 + 1, x0 + 1) += w11 * gw;

          const Array2D& a = t.i_avg.chan[static_cast<size_t>(c)];
          if (!x_sat)
            pull_x += gw * ((1.0 - fy) * (a(y0, x0 + 1) - a(y0, x0)) +
                            fy * (a(y0 + 1, x0 + 1) - a(y0 + 1, x0)));
          if (!y_sat)
            pull_y += gw * ((1.0 - fx) * (a(y0 + 1, x0) - a(y0, x0)) +
                            fx * (a(y0 + 1, x0 + 1) - a(y0, x0 + 1)));
        }

        // sample position = pixel - displacement, so d(sample)/d(theta) is
        // minus the lattice weight times the block extent.
        const LatticePos lp = lattice_pos(g, r, cc);
        const Scalar wy[2] = {1.0 - lp.ty, lp.ty};
        const Scalar wx[2] = {1.0 - lp.tx, lp.tx};
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int gi = lp.cell_row + dy, gj = lp.cell_col + dx;
            if (gi < 1 || gi > m - 1 || gj < 1 || gj > n - 1) continue;
            const Scalar b = wy[dy] * wx[dx];
            grad[warp_index(warp_seg, n, gi - 1, gj - 1, 0)] += pull_x * (-ext_x) * b;
            grad[warp_index(warp_seg, n, gi - 1, gj - 1, 1)] += pull_y * (-ext_y) * b;
          }
      }
  } else {
    gavg = gwarped;
  }

  // Averaging: the averaged image is the softmax(phi1) combination of the
  // three candidates; only the raw weights receive gradient.
  if (t.stages.averaging) {
    const FamilySegment& phi1_seg = L.seg[kComposeAvg];
    for (int c = 0; c < 3; ++c)
      for (int bi = 0; bi < m; ++bi)
        for (int bj = 0; bj < n; ++bj) {
          const Array2D& gc = gavg.chan[static_cast<size_t>(c)];
          Vec3 s;
          s[0] = block_dot(gc, t.avg1.chan[static_cast<size_t>(c)], g, bi, bj);
          s[1] = block_dot(gc, t.avg2.chan[static_cast<size_t>(c)], g, bi, bj);
          s[2] = block_dot(gc, t.avg3.chan[static_cast<size_t>(c)], g, bi, bj);
          const Vec3 wbar(t.wbar_avg.w[0][static_cast<size_t>(c)](bi, bj),
                          t.wbar_avg.w[1][static_cast<size_t>(c)](bi, bj),
                          t.wbar_avg.w[2][static_cast<size_t>(c)](bi, bj));
          add_softmax_pull(grad, phi1_seg, n, bi, bj, c, wbar, s);
        }
  }

  return grad;
}

ObfuscationObjective::ObfuscationObjective(const Image& input, const BlockGrid& grid,
                                           ExtractorList extractors,
                                           const EnergyFlags& flags,
                                           const StageOptions& stages,
                                           const TransformRegistry& reg,
                                           std::vector<Scalar> extractor_weights)
    : input_(input),
      grid_(grid),
      extractors_(std::move(extractors)),
      flags_(flags),
      stages_(stages),
      layout_(make_layout(grid, reg)),
      template_(make_parameter_set(grid)),
      weights_(std::move(extractor_weights)) {
  if (!weights_.empty() && weights_.size() != extractors_.size())
    throw ConfigError("extractor weight list does not match extractor list");
  feats_in_.reserve(extractors_.size());
  for (auto& e : extractors_) feats_in_.push_back(e->extract(input_));
}

ParameterSet ObfuscationObjective::materialize(const VecX& v) const {
  return unflatten(v, layout_, template_);
}

PipelineTrace ObfuscationObjective::run_forward(const VecX& v) {
  return forward(input_, grid_, materialize(v), stages_);
}

Scalar ObfuscationObjective::value(const VecX& v) {
  Scalar e = 0;
  if (flags_.u) e += energy_u(v, layout_);
  if (flags_.c) e += energy_c(v, layout_);
  if (flags_.md() && !extractors_.empty()) {
    const PipelineTrace t = run_forward(v);
    for (size_t k = 0; k < extractors_.size(); ++k) {
      const Scalar wk = weights_.empty() ? 1.0 : weights_[k];
      const FeatureVector fo = extractors_[k]->extract(t.i_out);
      if (flags_.d) e += wk * distance_energy(fo, feats_in_[k]);
      if (flags_.s) e += wk * cosine_energy(fo, feats_in_[k]);
    }
  }
  return e;
}

Scalar ObfuscationObjective::value_and_grad(const VecX& v, VecX& grad) {
  Scalar e = 0;
  if (flags_.u) e += energy_u(v, layout_);
  if (flags_.c) e += energy_c(v, layout_);

  if (flags_.md() && !extractors_.empty()) {
    const PipelineTrace t = run_forward(v);
    std::vector<FeatureVector> feats_out;
    feats_out.reserve(extractors_.size());
    for (size_t k = 0; k < extractors_.size(); ++k) {
      feats_out.push_back(extractors_[k]->extract(t.i_out));
      const Scalar wk = weights_.empty() ? 1.0 : weights_[k];
      if (flags_.d) e += wk * distance_energy(feats_out[k], feats_in_[k]);
      if (flags_.s) e += wk * cosine_energy(feats_out[k], feats_in_[k]);
    }
    grad = backward(t, materialize(v), v, layout_, extractors_, feats_in_, feats_out,
                    flags_, weights_);
  } else {
    grad = VecX::Zero(layout_.size);
    if (flags_.u) add_energy_u_grad(v, layout_, grad);
    if (flags_.c) add_energy_c_grad(v, layout_, grad);
  }
  return e;
}

EnergyReport ObfuscationObjective::report(const VecX& v, int iter) {
  EnergyReport r;
  r.iter = iter;
  r.enabled = flags_;
  r.e_u = energy_u(v, layout_);
  r.e_c = energy_c(v, layout_);
  if (!extractors_.empty()) {
    const PipelineTrace t = run_forward(v);
    for (size_t k = 0; k < extractors_.size(); ++k) {
      const Scalar wk = weights_.empty() ? 1.0 : weights_[k];
      const FeatureVector fo = extractors_[k]->extract(t.i_out);
      r.e_d += wk * distance_energy(fo, feats_in_[k]);
      r.e_s += wk * cosine_energy(fo, feats_in_[k]);
    }
  }
  r.total = (flags_.u ? r.e_u : 0.0) + (flags_.c ? r.e_c : 0.0) +
            (flags_.d ? r.e_d : 0.0) + (flags_.s ? r.e_s : 0.0);
  return r;
}

FdReport fd_check_function(const std::function<Scalar(const VecX&)>& f,
                           const VecX& grad, const VecX& x, Scalar h, Scalar tol,
                           const std::function<bool(int)>& kink_adjacent) {
  if (!(h > 0) || !std::isfinite(h))
    throw InvalidStepError("finite-difference step must be finite and positive");
  if (grad.size() != x.size()) throw LengthError("gradient length mismatch");

  FdReport rep;
  rep.total = static_cast<int>(x.size());
  Scalar err_sum = 0;
  VecX probe = x;
  for (int i = 0; i < x.size(); ++i) {
    if (kink_adjacent && kink_adjacent(i)) {
      ++rep.kink_adjacent;
      continue;
    }
    probe[i] = x[i] + h;
    const Scalar fp = f(probe);
    probe[i] = x[i] - h;
    const Scalar fm = f(probe);
    probe[i] = x[i];
    const Scalar fd = (fp - fm) / (2.0 * h);
    const Scalar rel =
        std::fabs(grad[i] - fd) / std::fmax(1e-6, std::fabs(grad[i]) + std::fabs(fd));
    ++rep.checked;
    if (rel <= tol) ++rep.passed;
    rep.max_rel = std::fmax(rep.max_rel, rel);
    err_sum += rel;
  }
  rep.mean_rel = rep.checked > 0 ? err_sum / rep.checked : 0.0;
  rep.pass_fraction = rep.checked > 0 ? static_cast<Scalar>(rep.passed) / rep.checked : 1.0;
  return rep;
}

bool hinge_kink_adjacent(const ParamLayout& L, const VecX& v, int i, Scalar h,
                         const EnergyFlags& flags) {
  const int fam = L.family_of(i);
  const FamilySegment& s = L.seg[static_cast<size_t>(fam)];
  const Scalar th = v[i];
  if (flags.u && (fam == kWarp || fam == kSinusoid || fam == kSpeckle) && s.margin > 0) {
    if (std::fabs(th) < h) return true;
    if (std::fabs(std::fabs(th) - s.margin) < h) return true;
  }
  if (flags.c && fam == kColorScale && s.margin > 1.0) {
    if (std::fabs(th - 1.0) < h) return true;
    if (std::fabs(th - s.margin) < h) return true;
    if (std::fabs(th - 1.0 / s.margin) < h) return true;
  }
  return false;
}

FdReport fd_check(const Image& input, const BlockGrid& grid, const ParameterSet& p,
                  ExtractorList& extractors, const EnergyFlags& flags,
                  const StageOptions& stages, const TransformRegistry& reg, Scalar h,
                  Scalar tol, const std::vector<Scalar>& extractor_weights) {
  ObfuscationObjective obj(input, grid, extractors, flags, stages, reg,
                           extractor_weights);
  const VecX v = flatten(p, obj.layout());
  VecX g;
  obj.value_and_grad(v, g);
  const ParamLayout& L = obj.layout();
  return fd_check_function([&obj](const VecX& x) { return obj.value(x); }, g, v, h, tol,
                           [&](int i) { return hinge_kink_adjacent(L, v, i, h, flags); });
}

}  // namespace forbes
