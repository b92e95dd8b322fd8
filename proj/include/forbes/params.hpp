#pragma once

#include <array>
#include <iosfwd>

#include "forbes/image.hpp"
#include "forbes/types.hpp"

namespace forbes {

enum class Category { averaging, warping, noising, scaling };

// How a transform's parameters are drawn at initialization.
enum class ParamKind { fixed, uniform, color };

// Static description of one obfuscating transformation: its parameter box,
// the indecipherability margin, and the parameter count on an M x N grid.
struct TransformSpec {
  int id = 0;  // 1..8
  const char* name = "";
  Category category = Category::averaging;
  Scalar theta_min = 0, theta_max = 0;
  Scalar margin = 0;
  ParamKind kind = ParamKind::fixed;

  int param_count(int block_rows, int block_cols) const;
};

class TransformRegistry {
 public:
  // f1 mosaicking, f2 horizontal mean, f3 vertical mean: blend weight in
  // [1,1], margin 0. f4 warping: [-0.3, 0.3], margin 0.05. f5 sinusoid:
  // [0, pi], margin 0. f6 checkerboard: [1,1], margin 0. f7 speckle:
  // [-0.5, 0.5], margin 0.1. f8 color scaling: [10/11, 11/10], margin 1.05.
  static TransformRegistry standard();

  const TransformSpec& get(int id) const;
  void set_margin(int id, Scalar margin);

 private:
  std::array<TransformSpec, 8> specs_{};
};

// Per-block, per-channel scalar field: f[channel](block_row, block_col).
using ChannelField = std::array<Array2D, 3>;

// Three composing weights per (block, channel): w[k][channel](bi, bj).
struct TripleField {
  std::array<ChannelField, 3> w;
};

ChannelField make_channel_field(int block_rows, int block_cols, Scalar value);
TripleField make_triple_field(int block_rows, int block_cols, Scalar value);

// Every parameter the pipeline consumes, shaped by one block grid.
// theta1..theta3 blend the averaging transforms and theta6 scales the
// checkerboard magnitude; all four stay pinned to 1. warp_x/warp_y hold one
// displacement pair per inner grid corner, in units of the regular block
// extent. phi1/phi2 are raw composing weights, softmax-normalized at use.
struct ParameterSet {
  int block_rows = 0, block_cols = 0;
  ChannelField theta1, theta2, theta3, theta6;
  Array2D warp_x, warp_y;  // each (M-1) x (N-1)
  ChannelField theta5;     // sinusoid wavefront angles
  ChannelField theta7;     // speckle center magnitudes
  ChannelField theta8;     // color scale factors
  TripleField phi1, phi2;
};

// Fixed families at 1, everything else zero-filled.
ParameterSet make_parameter_set(int block_rows, int block_cols);
ParameterSet make_parameter_set(const BlockGrid& grid);

// Segments of the flat optimization vector, in flattening order.
enum Family : int {
  kWarp = 0,
  kSinusoid,
  kSpeckle,
  kColorScale,
  kComposeAvg,
  kComposeNoise,
  kFamilyCount
};

struct FamilySegment {
  int offset = 0;
  int length = 0;
  Scalar lower = 0, upper = 0;  // box; meaningful only when boxed
  Scalar margin = 0;
  bool boxed = true;
  int transform_id = 0;  // 0 for composing weights
};

// Flattening order: warp displacements (grid-point row-major, x then y),
// then theta5, theta7, theta8 (block row-major, channels R,G,B), then
// phi1, phi2 (block row-major, R,G,B, weight 0..2).
struct ParamLayout {
  int block_rows = 0, block_cols = 0;
  int size = 0;
  std::array<FamilySegment, kFamilyCount> seg;

  int family_of(int index) const;
};

ParamLayout make_layout(int block_rows, int block_cols, const TransformRegistry& reg);
ParamLayout make_layout(const BlockGrid& grid, const TransformRegistry& reg);

VecX flatten(const ParameterSet& p, const ParamLayout& layout);

// Writes free coordinates back over a copy of `fixed_template`; fixed
// families pass through untouched. No projection happens here.
ParameterSet unflatten(const VecX& v, const ParamLayout& layout,
                       const ParameterSet& fixed_template);

// Clamps boxed coordinates into their ranges; composing weights pass
// through unchanged. Idempotent.
VecX project_box(VecX v, const ParamLayout& layout);

// Key-value text serialization, one record per parameter family with dims
// and row-major values at full round-trip precision.
void save_params_text(std::ostream& os, const ParameterSet& p);
ParameterSet load_params_text(std::istream& is);

}  // namespace forbes
