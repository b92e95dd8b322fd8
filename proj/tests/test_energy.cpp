#include <cmath>

#include "doctest.h"
#include "forbes/energy.hpp"
#include "forbes/errors.hpp"
#include "forbes/rng.hpp"

using namespace forbes;

namespace {

struct Flat {
  ParamLayout layout;
  VecX v;
};

Flat zero_flat(int m, int n, const TransformRegistry& reg) {
  Flat f;
  f.layout = make_layout(m, n, reg);
  f.v = VecX::Zero(f.layout.size);
  return f;
}

}  // namespace

TEST_SUITE("energy") {
  TEST_CASE("zero parameters pay the full magnitude hinge") {
    const TransformRegistry reg = TransformRegistry::standard();
    Flat f = zero_flat(7, 7, reg);
    // 72 warp coords at margin 0.05 plus 147 speckle coords at margin 0.1;
    // the sinusoid margin is zero, so that family never contributes.
    CHECK(energy_u(f.v, f.layout) == doctest::Approx(18.3).epsilon(1e-12));
    // Scale factors at zero sit outside (1/lambda, lambda): no penalty.
    CHECK(energy_c(f.v, f.layout) == 0.0);

    // At the |theta| = 0 kink the subgradient is taken as zero.
    VecX g = VecX::Zero(f.layout.size);
    add_energy_u_grad(f.v, f.layout, g);
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("moving one coordinate changes exactly its hinge term") {
    const TransformRegistry reg = TransformRegistry::standard();
    Flat f = zero_flat(7, 7, reg);
    const FamilySegment& sp = f.layout.seg[kSpeckle];
    f.v[sp.offset + 5] = 0.04;  // inside the 0.1 margin
    CHECK(energy_u(f.v, f.layout) == doctest::Approx(18.3 - 0.04).epsilon(1e-12));

    VecX g = VecX::Zero(f.layout.size);
    add_energy_u_grad(f.v, f.layout, g);
    CHECK(g[sp.offset + 5] == -1.0);
    g[sp.offset + 5] = 0;
    CHECK(g.cwiseAbs().maxCoeff() == 0.0);

    // Negative side and satisfied coordinates.
    f.v[sp.offset + 5] = -0.04;
    f.v[sp.offset + 6] = 0.3;  // beyond the margin: hinge satisfied
    CHECK(energy_u(f.v, f.layout) == doctest::Approx(18.3 - 0.04 - 0.1).epsilon(1e-12));
    g.setZero();
    add_energy_u_grad(f.v, f.layout, g);
    CHECK(g[sp.offset + 5] == 1.0);
    CHECK(g[sp.offset + 6] == 0.0);
  }

  TEST_CASE("scale hinge penalizes factors near one from both sides") {
    const TransformRegistry reg = TransformRegistry::standard();
    Flat f = zero_flat(7, 7, reg);
    const int o = f.layout.seg[kColorScale].offset;
    const Scalar lam = 1.05;

    struct Point {
      Scalar v, energy, grad;
    };
    const Point pts[] = {
        {0.92, 0.0, 0.0},            // below 1/lambda: satisfied
        {0.98, 0.98 - 1 / lam, 1.0}, // inside from below
        {1.0, 0.0, 0.0},             // exactly neutral
        {1.02, lam - 1.02, -1.0},    // inside from above
        {1.09, 0.0, 0.0},            // beyond lambda: satisfied
        {1 / lam, 0.0, 0.0},         // kink
        {lam, 0.0, 0.0},             // kink
    };
    for (const Point& pt : pts) {
      CAPTURE(pt.v);
      f.v[o] = pt.v;
      CHECK(energy_c(f.v, f.layout) == doctest::Approx(pt.energy).epsilon(1e-12));
      VecX g = VecX::Zero(f.layout.size);
      add_energy_c_grad(f.v, f.layout, g);
      CHECK(g[o] == pt.grad);
      g[o] = 0;
      CHECK(g.cwiseAbs().maxCoeff() == 0.0);
    }
  }

  TEST_CASE("margins at or below the neutral point disable their terms") {
    TransformRegistry reg = TransformRegistry::standard();
    reg.set_margin(4, 0.0);
    reg.set_margin(7, 0.0);
    reg.set_margin(8, 1.0);
    Flat f = zero_flat(5, 5, reg);
    CHECK(energy_u(f.v, f.layout) == 0.0);
    f.v[f.layout.seg[kColorScale].offset] = 0.99;
    CHECK(energy_c(f.v, f.layout) == 0.0);
  }

  TEST_CASE("structured and flat hinge evaluations agree") {
    const TransformRegistry reg = TransformRegistry::standard();
    const BlockGrid grid = make_grid(28, 28, 4, 4);
    const ParameterSet p = init_parameters(grid, 77, reg);
    const ParamLayout L = make_layout(4, 4, reg);
    const VecX v = flatten(p, L);
    CHECK(energy_u(p, reg) == energy_u(v, L));
    CHECK(energy_c(p, reg) == energy_c(v, L));
    CHECK(energy_u(VecX::Zero(L.size), L) > 0.0);
    CHECK_THROWS_AS(energy_u(VecX::Zero(3), L), LengthError);
  }

  TEST_CASE("feature distance is the unsquared norm") {
    VecX a = VecX::Zero(3), b = VecX::Zero(3);
    a << 3, 4, 0;
    CHECK(distance_energy(a, b) == 5.0);
    CHECK(distance_energy(a, a) == 0.0);
    CHECK_THROWS_AS(distance_energy(a, VecX::Zero(4)), DimensionError);
  }

  TEST_CASE("cosine dissimilarity spans zero to two and ignores scale") {
    VecX a(2), b(2), c(2);
    a << 1, 0;
    b << 0, 1;
    c << -2, 0;
    CHECK(cosine_energy(a, a) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(cosine_energy(a, b) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_energy(a, c) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(std::abs(cosine_energy(3 * a, b) - cosine_energy(a, b)) < 1e-12);
    // Degenerate norms report maximal dissimilarity with no direction.
    CHECK(cosine_energy(VecX::Zero(2), a) == 1.0);
  }

  TEST_CASE("feature-space gradient matches finite differences") {
    VecX out(3), in(3);
    out << 0.8, -0.3, 0.5;
    in << 0.2, 0.4, -0.1;
    for (int mode = 0; mode < 3; ++mode) {
      const bool d = mode != 1, s = mode != 0;
      const VecX seed = md_seed(out, in, d, s, 1.0);
      for (int k = 0; k < 3; ++k) {
        const Scalar h = 1e-6;
        VecX op = out, om = out;
        op[k] += h;
        om[k] -= h;
        const Scalar fp = (d ? distance_energy(op, in) : 0.0) +
                          (s ? cosine_energy(op, in) : 0.0);
        const Scalar fm = (d ? distance_energy(om, in) : 0.0) +
                          (s ? cosine_energy(om, in) : 0.0);
        CHECK(seed[k] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("seed weighting and term additivity are exact") {
    VecX out(4), in(4);
    out << 0.8, -0.3, 0.5, 0.1;
    in << 0.2, 0.4, -0.1, 0.9;
    const VecX d_only = md_seed(out, in, true, false, 1.0);
    const VecX s_only = md_seed(out, in, false, true, 1.0);
    const VecX both = md_seed(out, in, true, true, 1.0);
    CHECK((both - (d_only + s_only)).cwiseAbs().maxCoeff() == 0.0);
    const VecX doubled = md_seed(out, in, true, true, 2.0);
    CHECK((doubled - 2.0 * both).cwiseAbs().maxCoeff() == 0.0);

    // Degenerate guards: no direction at coincident or zero features.
    CHECK(md_seed(in, in, true, false, 1.0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(md_seed(VecX::Zero(4), in, false, true, 1.0).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("energy flags classify enabled terms") {
    EnergyFlags none;
    none.u = none.c = none.d = none.s = false;
    CHECK_FALSE(none.any());
    CHECK_FALSE(none.md());
    EnergyFlags just_s = none;
    just_s.s = true;
    CHECK(just_s.any());
    CHECK(just_s.md());
    EnergyFlags just_u = none;
    just_u.u = true;
    CHECK(just_u.any());
    CHECK_FALSE(just_u.md());
  }
}
