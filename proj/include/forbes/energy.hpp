#pragma once

#include "forbes/extractor.hpp"
#include "forbes/params.hpp"

namespace forbes {

struct EnergyFlags {
  bool u = true;  // hinge on uniform-family magnitudes
  bool c = true;  // hinge on color scale factors
  bool d = true;  // feature distance
  bool s = true;  // feature cosine dissimilarity

  bool any() const { return u || c || d || s; }
  bool md() const { return d || s; }
};

struct EnergyReport {
  int iter = 0;
  Scalar e_u = 0, e_c = 0, e_d = 0, e_s = 0;
  Scalar total = 0;     // sum of the enabled terms only
  Scalar grad_inf = 0;  // infinity norm of the parameter gradient
  EnergyFlags enabled;
};

// Human-indecipherability hinge on the uniform families (warp, sinusoid,
// speckle): sum of max(margin - |theta|, 0). Piecewise linear; the
// subgradient at kinks is taken as 0.
Scalar energy_u(const VecX& v, const ParamLayout& layout);
void add_energy_u_grad(const VecX& v, const ParamLayout& layout, VecX& grad);

// Hinge on the color scale factors with margin lambda: penalizes factors
// inside (1/lambda, lambda) on whichever side of 1 they sit. Margins at or
// below 1 disable the term.
Scalar energy_c(const VecX& v, const ParamLayout& layout);
void add_energy_c_grad(const VecX& v, const ParamLayout& layout, VecX& grad);

// Convenience wrappers on a structured parameter set.
Scalar energy_u(const ParameterSet& p, const TransformRegistry& reg);
Scalar energy_c(const ParameterSet& p, const TransformRegistry& reg);

// Machine-decipherability terms between two feature vectors.
Scalar distance_energy(const FeatureVector& out, const FeatureVector& in);
// 1 - cos(out, in); returns 1 (with zero gradient) when either norm
// underflows 1e-12.
Scalar cosine_energy(const FeatureVector& out, const FeatureVector& in);

// d(weight * (E_D + E_S)) / d(out) for the enabled terms, with the same
// degenerate-norm guards as the values.
VecX md_seed(const FeatureVector& out, const FeatureVector& in, bool enable_d,
             bool enable_s, Scalar weight);

}  // namespace forbes
