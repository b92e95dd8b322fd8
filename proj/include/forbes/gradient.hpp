#pragma once

#include <functional>
#include <vector>

#include "forbes/composite.hpp"
#include "forbes/energy.hpp"
#include "forbes/extractor.hpp"

namespace forbes {

// Analytic gradient of the enabled energy terms with respect to the flat
// parameter vector, assembled by chaining hand-written vector-Jacobian
// products backward through scaling, noising, warping and averaging, with
// the extractor VJPs seeding the image-space gradient. Families whose stage
// is disabled get zero entries.
//
// `feats_out` must hold extract(trace.i_out) per extractor, aligned with
// `extractors`; `weights` scales each extractor's contribution (empty means
// all ones).
VecX backward(const PipelineTrace& trace, const ParameterSet& p, const VecX& v,
              const ParamLayout& layout, ExtractorList& extractors,
              const std::vector<FeatureVector>& feats_in,
              const std::vector<FeatureVector>& feats_out, const EnergyFlags& flags,
              const std::vector<Scalar>& weights = {});

// The full objective: unflatten -> forward -> enabled energies, plus the
// backward chain. Caches the layout, the fixed-parameter template, and the
// input features.
class ObfuscationObjective {
 public:
  ObfuscationObjective(const Image& input, const BlockGrid& grid,
                       ExtractorList extractors, const EnergyFlags& flags,
                       const StageOptions& stages, const TransformRegistry& reg,
                       std::vector<Scalar> extractor_weights = {});

  const ParamLayout& layout() const { return layout_; }
  const BlockGrid& grid() const { return grid_; }
  const std::vector<FeatureVector>& input_features() const { return feats_in_; }

  ParameterSet materialize(const VecX& v) const;

  Scalar value(const VecX& v);
  Scalar value_and_grad(const VecX& v, VecX& grad);

  // Term breakdown at v. All four terms are measured when extractors are
  // available; `total` sums only the enabled ones.
  EnergyReport report(const VecX& v, int iter);

 private:
  PipelineTrace run_forward(const VecX& v);

  Image input_;
  BlockGrid grid_;
  ExtractorList extractors_;
  EnergyFlags flags_;
  StageOptions stages_;
  ParamLayout layout_;
  ParameterSet template_;
  std::vector<FeatureVector> feats_in_;
  std::vector<Scalar> weights_;
};

struct FdReport {
  int total = 0;          // coordinates in the vector
  int checked = 0;        // compared against central differences
  int passed = 0;
  int kink_adjacent = 0;  // excluded: within h of a hinge kink
  Scalar max_rel = 0;
  Scalar mean_rel = 0;
  Scalar pass_fraction = 1.0;
};

// Central-difference check of `grad` against `f` around `x`. Relative error
// per coordinate is |g - fd| / max(1e-6, |g| + |fd|). Coordinates flagged
// by `kink_adjacent` are excluded from the comparison. Throws
// InvalidStepError unless h is finite and positive.
FdReport fd_check_function(const std::function<Scalar(const VecX&)>& f,
                           const VecX& grad, const VecX& x, Scalar h, Scalar tol,
                           const std::function<bool(int)>& kink_adjacent = {});

// True when v[i] lies within h of a kink of the enabled hinge energies
// (|theta| = margin, theta = 0, theta = 1, theta = margin, theta = 1/margin).
bool hinge_kink_adjacent(const ParamLayout& layout, const VecX& v, int i, Scalar h,
                         const EnergyFlags& flags);

// End-to-end check of the pipeline gradient at p.
FdReport fd_check(const Image& input, const BlockGrid& grid, const ParameterSet& p,
                  ExtractorList& extractors, const EnergyFlags& flags,
                  const StageOptions& stages, const TransformRegistry& reg,
                  Scalar h, Scalar tol,
                  const std::vector<Scalar>& extractor_weights = {});

}  // namespace forbes
