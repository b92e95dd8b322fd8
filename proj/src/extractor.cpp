#include "forbes/extractor.hpp"

#include <cmath>

#include "forbes/errors.hpp"
#include "forbes/rng.hpp"

namespace forbes {

namespace {

constexpr std::uint64_t kEmbedderSeed = 0x464F52424553ULL;
constexpr int kPool = 8;
constexpr int kPooledLen = kPool * kPool * 3;  // 192
constexpr int kFeatureDim = 64;

class BuiltinEmbedder final : public Extractor {
 public:
  BuiltinEmbedder() : name_("builtin"), proj_(kFeatureDim, kPooledLen) {
    // Fixed projection, filled row-major from one seeded stream; entries
    // are uniform over [-1/sqrt(192), 1/sqrt(192)).
    SplitMix64 rng(kEmbedderSeed);
    const Scalar s = std::sqrt(static_cast<Scalar>(kPooledLen));
    for (int i = 0; i < kFeatureDim; ++i)
      for (int j = 0; j < kPooledLen; ++j)
        proj_(i, j) = rng.uniform01() * (2.0 / s) - 1.0 / s;
  }

  const std::string& name() const override { return name_; }
  int dim() const override { return kFeatureDim; }

  FeatureVector extract(const Image& img) override {
    const VecX x = pool(img);
    return (proj_ * x).array().tanh();
  }

  Image extract_vjp(const Image& img, const VecX& upstream) override {
    if (upstream.size() != kFeatureDim)
      throw DimensionError("upstream gradient has wrong length");
    const VecX x = pool(img);
    const VecX y = (proj_ * x).array().tanh();
    const VecX dz = upstream.array() * (1.0 - y.array().square());
    const VecX dx = proj_.transpose() * dz;

    const BlockGrid g = make_grid(img.rows, img.cols, kPool, kPool);
    Image grad(img.rows, img.cols);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < kPool; ++i)
        for (int j = 0; j < kPool; ++j) {
          const Scalar count =
              static_cast<Scalar>(g.row_extent[i]) * static_cast<Scalar>(g.col_extent[j]);
          grad.chan[static_cast<size_t>(c)]
              .block(g.row_offset[i], g.col_offset[j], g.row_extent[i], g.col_extent[j])
              .setConstant(dx[(c * kPool + i) * kPool + j] / count);
        }
    return grad;
  }

 private:
  VecX pool(const Image& img) const {
    if (img.rows < kPool || img.cols < kPool)
      throw DimensionError("embedder needs at least an 8x8 image");
    const BlockGrid g = make_grid(img.rows, img.cols, kPool, kPool);
    VecX x(kPooledLen);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < kPool; ++i)
        for (int j = 0; j < kPool; ++j)
          x[(c * kPool + i) * kPool + j] = block_mean(img, g, i, j, c);
    return x;
  }

  std::string name_;
  MatX proj_;
};

}  // namespace

std::shared_ptr<Extractor> make_builtin_embedder() {
  return std::make_shared<BuiltinEmbedder>();
}

std::shared_ptr<Extractor> make_extractor(const std::string& spec) {
  if (spec == "builtin") return make_builtin_embedder();
  if (spec.rfind("external:", 0) == 0) {
    const std::string cmd = spec.substr(9);
    if (cmd.empty()) throw ConfigError("empty external extractor command");
    return make_external_extractor(cmd);
  }
  throw ConfigError("unknown extractor spec '" + spec + "'");
}

}  // namespace forbes
