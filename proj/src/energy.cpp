#include "forbes/energy.hpp"

#include <cmath>

#include "forbes/errors.hpp"

namespace forbes {

namespace {

constexpr Scalar kNormFloor = 1e-12;

const Family kUniformFamilies[] = {kWarp, kSinusoid, kSpeckle};

void check_len(const VecX& v, const ParamLayout& L) {
  if (v.size() != L.size) throw LengthError("flat vector length mismatch");
}

}  // namespace

Scalar energy_u(const VecX& v, const ParamLayout& L) {
  check_len(v, L);
  Scalar e = 0;
  for (Family fam : kUniformFamilies) {
    const FamilySegment& s = L.seg[static_cast<size_t>(fam)];
    if (s.margin <= 0) continue;
    for (int i = s.offset; i < s.offset + s.length; ++i)
      e += std::fmax(s.margin - std::fabs(v[i]), 0.0);
  }
  return e;
}

void add_energy_u_grad(const VecX& v, const ParamLayout& L, VecX& grad) {
  check_len(v, L);
  check_len(grad, L);
  for (Family fam : kUniformFamilies) {
    const FamilySegment& s = L.seg[static_cast<size_t>(fam)];
    if (s.margin <= 0) continue;
    for (int i = s.offset; i < s.offset + s.length; ++i) {
      if (v[i] > 0 && v[i] < s.margin)
        grad[i] += -1.0;
      else if (v[i] < 0 && v[i] > -s.margin)
        grad[i] += 1.0;
    }
  }
}

Scalar energy_c(const VecX& v, const ParamLayout& L) {
  check_len(v, L);
  const FamilySegment& s = L.seg[kColorScale];
  if (s.margin <= 1.0) return 0;
  const Scalar lam = s.margin, inv = 1.0 / s.margin;
  Scalar e = 0;
  for (int i = s.offset; i < s.offset + s.length; ++i) {
    const Scalar above = v[i] > 1.0 ? lam - v[i] : 0.0;
    const Scalar below = v[i] < 1.0 ? v[i] - inv : 0.0;
    e += std::fmax(above, below);
  }
  return e;
}

void add_energy_c_grad(const VecX& v, const ParamLayout& L, VecX& grad) {
  check_len(v, L);
  check_len(grad, L);
  const FamilySegment& s = L.seg[kColorScale];
  if (s.margin <= 1.0) return;
  const Scalar lam = s.margin, inv = 1.0 / s.margin;
  for (int i = s.offset; i < s.offset + s.length; ++i) {
    if (v[i] > 1.0 && v[i] < lam)
      grad[i] += -1.0;
    else if (v[i] > inv && v[i] < 1.0)
      grad[i] += 1.0;
  }
}

Scalar energy_u(const ParameterSet& p, const TransformRegistry& reg) {
  const ParamLayout L = make_layout(p.block_rows, p.block_cols, reg);
  return energy_u(flatten(p, L), L);
}

Scalar energy_c(const ParameterSet& p, const TransformRegistry& reg) {
  const ParamLayout L = make_layout(p.block_rows, p.block_cols, reg);
  return energy_c(flatten(p, L), L);
}

Scalar distance_energy(const FeatureVector& out, const FeatureVector& in) {
  if (out.size() != in.size()) throw DimensionError("feature length mismatch");
  return (out - in).norm();
}

Scalar cosine_energy(const FeatureVector& out, const FeatureVector& in) {
  if (out.size() != in.size()) throw DimensionError("feature length mismatch");
  const Scalar no = out.norm(), ni = in.norm();
  if (no < kNormFloor || ni < kNormFloor) return 1.0;
  return 1.0 - out.dot(in) / (no * ni);
}

VecX md_seed(const FeatureVector& out, const FeatureVector& in, bool enable_d,
             bool enable_s, Scalar weight) {
  if (out.size() != in.size()) throw DimensionError("feature length mismatch");
  VecX seed = VecX::Zero(out.size());
  if (enable_d) {
    const VecX diff = out - in;
    const Scalar n = diff.norm();
    if (n >= kNormFloor) seed += diff / n;
  }
  if (enable_s) {
    const Scalar no = out.norm(), ni = in.norm();
    if (no >= kNormFloor && ni >= kNormFloor) {
      const Scalar cosv = out.dot(in) / (no * ni);
      seed += -in / (no * ni) + cosv * out / (no * no);
    }
  }
  return weight * seed;
}

}  // namespace forbes
