#include <cmath>
#include <utility>

#include "doctest.h"
#include "forbes/errors.hpp"
#include "forbes/extractor.hpp"
#include "forbes/rng.hpp"

using namespace forbes;

namespace {

// Random direction image with entries in [-1, 1].
Image direction(int rows, int cols, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Image d(rows, cols);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < rows; ++r)
      for (int col = 0; col < cols; ++col) d(c, r, col) = rng.uniform(-1.0, 1.0);
  return d;
}

Scalar image_dot(const Image& a, const Image& b) {
  Scalar s = 0;
  for (int c = 0; c < 3; ++c) s += (a.chan[c] * b.chan[c]).sum();
  return s;
}

Image axpy(const Image& x, Scalar a, const Image& y) {
  Image out(x.rows, x.cols);
  for (int c = 0; c < 3; ++c) out.chan[c] = x.chan[c] + a * y.chan[c];
  return out;
}

}  // namespace

TEST_SUITE("extractor") {
  TEST_CASE("builtin embedder has a stable identity") {
    auto e = make_builtin_embedder();
    CHECK(e->name() == "builtin");
    CHECK(e->dim() == 64);
    CHECK(e->supports_vjp());

    // The projection is fixed: two instances agree bitwise.
    auto e2 = make_builtin_embedder();
    const Image img = synth_image(24, 24, 17);
    const FeatureVector a = e->extract(img);
    const FeatureVector b = e2->extract(img);
    REQUIRE(a.size() == 64);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    for (int i = 0; i < 64; ++i) CHECK(std::abs(a[i]) < 1.0);  // tanh range
  }

  TEST_CASE("black image maps to the zero feature vector") {
    auto e = make_builtin_embedder();
    const FeatureVector f = e->extract(Image::constant(16, 16, 0.0));
    CHECK(f.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("features depend on pixels only through pool-cell means") {
    // 16x16 image -> 2x2 pool cells. Swapping values inside a cell keeps the
    // mean identical (dyadic values, so the sums are exact in any order).
    Image a(16, 16);
    SplitMix64 rng(4242);
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 16; ++r)
        for (int col = 0; col < 16; ++col)
          a(c, r, col) = static_cast<Scalar>(rng.next() % 16) / 16.0;
    Image b = a;
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 16; r += 2)
        for (int col = 0; col < 16; col += 2) {
          std::swap(b.chan[c](r, col), b.chan[c](r + 1, col + 1));
          std::swap(b.chan[c](r, col + 1), b.chan[c](r + 1, col));
        }
    auto e = make_builtin_embedder();
    const FeatureVector fa = e->extract(a);
    const FeatureVector fb = e->extract(b);
    CHECK((fa - fb).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("vjp is the exact adjoint of the directional derivative") {
    auto e = make_builtin_embedder();
    const Image img = synth_image(20, 28, 31);  // extents not multiples of 8
    for (std::uint64_t probe = 0; probe < 12; ++probe) {
      const Image w = direction(20, 28, 100 + probe);
      SplitMix64 rng(200 + probe);
      VecX u(e->dim());
      for (int i = 0; i < u.size(); ++i) u[i] = rng.uniform(-1.0, 1.0);

      // Central finite difference of <u, features> along w.
      const Scalar h = 1e-6;
      const Scalar fp = u.dot(e->extract(axpy(img, h, w)));
      const Scalar fm = u.dot(e->extract(axpy(img, -h, w)));
      const Scalar fd = (fp - fm) / (2 * h);

      const Scalar adj = image_dot(e->extract_vjp(img, u), w);
      CHECK(std::abs(adj - fd) < 1e-7 * std::max(1.0, std::abs(fd)));
    }
  }

  TEST_CASE("vjp spreads each pooled gradient evenly over its cell") {
    auto e = make_builtin_embedder();
    const Image img = synth_image(16, 16, 9);
    SplitMix64 rng(7);
    VecX u(64);
    for (int i = 0; i < 64; ++i) u[i] = rng.uniform(-1.0, 1.0);
    const Image g = e->extract_vjp(img, u);
    // Constant within each 2x2 pool cell.
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < 16; r += 2)
        for (int col = 0; col < 16; col += 2) {
          CHECK(g(c, r, col) == g(c, r + 1, col));
          CHECK(g(c, r, col) == g(c, r, col + 1));
          CHECK(g(c, r, col) == g(c, r + 1, col + 1));
        }
  }

  TEST_CASE("undersized images and bad specs are rejected") {
    auto e = make_builtin_embedder();
    CHECK_THROWS_AS(e->extract(Image::constant(7, 64, 0.5)), DimensionError);
    CHECK_THROWS_AS(e->extract(Image::constant(64, 7, 0.5)), DimensionError);
    CHECK_THROWS_AS(e->extract_vjp(synth_image(16, 16, 1), VecX::Zero(63)),
                    DimensionError);
    CHECK_THROWS_AS(make_extractor("bogus:x"), ConfigError);
    CHECK_THROWS_AS(make_extractor("external:"), ConfigError);
    CHECK(make_extractor("builtin")->dim() == 64);
  }
}
