#pragma once

#include <memory>
#include <string>
#include <vector>

#include "forbes/image.hpp"
#include "forbes/types.hpp"

namespace forbes {

using FeatureVector = VecX;

// A feature extractor maps an image to a fixed-length vector and can pull a
// feature-space gradient back to an image-space one. Implementations may be
// stateful (an external process), so extraction is non-const.
class Extractor {
 public:
  virtual ~Extractor() = default;

  virtual const std::string& name() const = 0;
  virtual int dim() const = 0;
  virtual bool supports_vjp() const { return true; }

  virtual FeatureVector extract(const Image& img) = 0;

  // Given d(E)/d(features), returns d(E)/d(image).
  virtual Image extract_vjp(const Image& img, const VecX& upstream) = 0;
};

using ExtractorList = std::vector<std::shared_ptr<Extractor>>;

// Deterministic built-in embedder: average-pool each channel to 8x8,
// flatten to 192, apply a fixed 64x192 projection, tanh. d = 64.
std::shared_ptr<Extractor> make_builtin_embedder();

// Wraps a child process speaking the stdio wire protocol (see
// external_extractor.cpp for the framing). The command is split on
// whitespace into an argv.
std::shared_ptr<Extractor> make_external_extractor(const std::string& command);

// "builtin" or "external:<command>".
std::shared_ptr<Extractor> make_extractor(const std::string& spec);

}  // namespace forbes
