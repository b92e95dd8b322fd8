#include <cmath>
#include <sstream>

#include "doctest.h"
#include "forbes/errors.hpp"
#include "forbes/params.hpp"
#include "forbes/rng.hpp"

using namespace forbes;

namespace {

ParameterSet random_params(int m, int n, std::uint64_t seed) {
  return init_parameters(make_grid(8 * m, 8 * n, m, n), seed,
                         TransformRegistry::standard());
}

}  // namespace

TEST_SUITE("params") {
  TEST_CASE("registry carries the standard table") {
    const TransformRegistry reg = TransformRegistry::standard();
    CHECK(reg.get(1).theta_min == 1.0);
    CHECK(reg.get(1).theta_max == 1.0);
    CHECK(reg.get(4).theta_min == -0.3);
    CHECK(reg.get(4).theta_max == 0.3);
    CHECK(reg.get(4).margin == 0.05);
    CHECK(reg.get(5).theta_max == doctest::Approx(3.14159265358979323846));
    CHECK(reg.get(5).margin == 0.0);
    CHECK(reg.get(7).theta_min == -0.5);
    CHECK(reg.get(7).margin == 0.1);
    CHECK(reg.get(8).theta_min == doctest::Approx(10.0 / 11.0));
    CHECK(reg.get(8).theta_max == doctest::Approx(11.0 / 10.0));
    CHECK(reg.get(8).margin == 1.05);
    CHECK(reg.get(4).param_count(7, 7) == 72);
    CHECK(reg.get(5).param_count(7, 7) == 147);
    CHECK_THROWS_AS(reg.get(0), ConfigError);
    CHECK_THROWS_AS(reg.get(9), ConfigError);
  }

  TEST_CASE("flat vector lengths") {
    const TransformRegistry reg = TransformRegistry::standard();
    CHECK(make_layout(7, 7, reg).size == 1395);
    CHECK(make_layout(1, 1, reg).size == 27);
    CHECK(make_layout(2, 3, reg).size == 2 * 1 * 2 + 3 * (6 * 3) + 2 * (6 * 9));
  }

  TEST_CASE("flatten and unflatten are inverse") {
    const TransformRegistry reg = TransformRegistry::standard();
    const ParamLayout layout = make_layout(3, 4, reg);
    const ParameterSet p = random_params(3, 4, 17);
    const VecX v = flatten(p, layout);
    CHECK(v.size() == layout.size);
    const ParameterSet q = unflatten(v, layout, make_parameter_set(3, 4));
    const VecX w = flatten(q, layout);
    CHECK((v.array() == w.array()).all());
    // Fixed families come from the template untouched.
    for (int c = 0; c < 3; ++c) {
      CHECK((q.theta1[c] == 1.0).all());
      CHECK((q.theta6[c] == 1.0).all());
    }
  }

  TEST_CASE("each flat coordinate maps to exactly one scalar") {
    const TransformRegistry reg = TransformRegistry::standard();
    const ParamLayout layout = make_layout(2, 2, reg);
    const ParameterSet base = make_parameter_set(2, 2);
    const VecX v0 = flatten(base, layout);
    for (int i = 0; i < layout.size; ++i) {
      VecX v = v0;
      v[i] += 1.0;
      const VecX round = flatten(unflatten(v, layout, base), layout);
      int changed = 0;
      for (int j = 0; j < layout.size; ++j)
        if (round[j] != v0[j]) {
          ++changed;
          CHECK(j == i);
        }
      CHECK(changed == 1);
    }
  }

  TEST_CASE("layout families sit in flattening order") {
    const TransformRegistry reg = TransformRegistry::standard();
    const ParamLayout layout = make_layout(7, 7, reg);
    CHECK(layout.seg[kWarp].offset == 0);
    CHECK(layout.seg[kWarp].length == 72);
    CHECK(layout.seg[kSinusoid].offset == 72);
    CHECK(layout.seg[kSpeckle].offset == 72 + 147);
    CHECK(layout.seg[kColorScale].offset == 72 + 2 * 147);
    CHECK(layout.seg[kComposeAvg].offset == 72 + 3 * 147);
    CHECK(layout.seg[kComposeNoise].offset == 72 + 3 * 147 + 441);
    CHECK(layout.seg[kComposeNoise].offset + layout.seg[kComposeNoise].length == 1395);
    CHECK(layout.family_of(0) == kWarp);
    CHECK(layout.family_of(71) == kWarp);
    CHECK(layout.family_of(72) == kSinusoid);
    CHECK(layout.family_of(1394) == kComposeNoise);
    CHECK(layout.seg[kComposeAvg].boxed == false);
    CHECK(layout.seg[kColorScale].boxed == true);
  }

  TEST_CASE("projection clamps boxed families only") {
    const TransformRegistry reg = TransformRegistry::standard();
    const ParamLayout layout = make_layout(2, 2, reg);
    VecX v = VecX::Constant(layout.size, 0.5);
    const VecX p = project_box(v, layout);
    CHECK(p[layout.seg[kWarp].offset] == 0.3);                 // 0.5 -> warp max
    CHECK(p[layout.seg[kSinusoid].offset] == 0.5);             // inside [0, pi]
    CHECK(p[layout.seg[kSpeckle].offset] == 0.5);              // at box edge
    CHECK(p[layout.seg[kColorScale].offset] == 10.0 / 11.0);   // 0.5 -> box min
    CHECK(p[layout.seg[kComposeAvg].offset] == 0.5);           // unboxed
    VecX big = VecX::Constant(layout.size, 7.25);
    const VecX q = project_box(big, layout);
    CHECK(q[layout.seg[kComposeNoise].offset] == 7.25);
    CHECK(q[layout.seg[kWarp].offset] == 0.3);
    // Idempotent.
    const VecX qq = project_box(q, layout);
    CHECK((q.array() == qq.array()).all());
  }

  TEST_CASE("text serialization round trips bit for bit") {
    const TransformRegistry reg = TransformRegistry::standard();
    const ParamLayout layout = make_layout(3, 2, reg);
    const ParameterSet p = random_params(3, 2, 23);
    std::stringstream ss;
    save_params_text(ss, p);
    const ParameterSet q = load_params_text(ss);
    const VecX vp = flatten(p, layout);
    const VecX vq = flatten(q, layout);
    REQUIRE(vp.size() == vq.size());
    for (int i = 0; i < vp.size(); ++i) CHECK(vp[i] == vq[i]);
  }

  TEST_CASE("loading rejects junk") {
    std::stringstream empty(""), wrong("not-params 1\n");
    CHECK_THROWS_AS(load_params_text(empty), FormatError);
    CHECK_THROWS_AS(load_params_text(wrong), FormatError);
  }

  TEST_CASE("flatten validates lengths") {
    const TransformRegistry reg = TransformRegistry::standard();
    const ParamLayout layout = make_layout(3, 3, reg);
    const VecX bad = VecX::Zero(layout.size - 1);
    CHECK_THROWS_AS(unflatten(bad, layout, make_parameter_set(3, 3)), LengthError);
  }

  TEST_CASE("margins can be overridden but stay sane") {
    TransformRegistry reg = TransformRegistry::standard();
    reg.set_margin(4, 0.2);
    CHECK(reg.get(4).margin == 0.2);
    CHECK_THROWS_AS(reg.set_margin(4, -0.1), ConfigError);
    CHECK_THROWS_AS(reg.set_margin(4, std::nan("")), ConfigError);
  }
}
