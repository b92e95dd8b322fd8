#pragma once

#include "forbes/transforms.hpp"

namespace forbes {

// Numerically stable softmax of three raw weights.
Vec3 softmax3(const Vec3& raw);

// Which pipeline stages run. Disabling averaging feeds the input straight
// to the warp, disabling warping feeds the averaged image to noising, and
// so on; clamp_in_forward additionally clamps the final image to [0, 1]
// inside the forward pass (so the extractor sees exactly what gets saved),
// rather than only at render time.
struct StageOptions {
  bool averaging = true;
  bool warping = true;
  bool noising = true;
  bool scaling = true;
  bool clamp_in_forward = false;
};

// Everything the backward pass needs to replay the forward pass: stage
// inputs/outputs, the three averaging candidates, the three noise maps,
// softmax-normalized composing weights, and the warp sample coordinates.
struct PipelineTrace {
  BlockGrid grid;
  StageOptions stages;
  Image input;

  Image avg1, avg2, avg3;   // blended f1/f2/f3 outputs (averaging enabled)
  TripleField wbar_avg;     // normalized phi1
  Image i_avg;

  WarpSamples samples;      // warping enabled
  Image i_warped;

  NoiseMap noise5, noise6, noise7;  // noising enabled
  TripleField wbar_noise;           // normalized phi2
  Image i_noi;

  Image out_preclamp;  // only meaningful when stages.clamp_in_forward
  Image i_out;
};

// Runs averaging -> warping -> noising -> scaling. The averaged image is
// the blockwise softmax(phi1) combination of the three averaging
// transforms; the noised image adds the warped image (coefficient one) to
// the softmax(phi2)-weighted noise maps; scaling multiplies per block and
// channel. No clamping unless stages.clamp_in_forward.
PipelineTrace forward(const Image& img, const BlockGrid& grid,
                      const ParameterSet& p, const StageOptions& stages = {});

// Softmax-normalize a raw composing-weight field per (block, channel).
TripleField normalize_weights(const TripleField& raw);

// The displayable result: the final image clamped to [0, 1].
Image render(const PipelineTrace& trace);

}  // namespace forbes
