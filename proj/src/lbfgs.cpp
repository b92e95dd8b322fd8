#include "forbes/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <utility>

namespace forbes {

const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::gradient: return "gradient";
    case StopReason::f_delta: return "f_delta";
    case StopReason::max_iters: return "max_iters";
    case StopReason::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Pair {
  VecX s, y;
  Scalar rho;  // 1 / (s.y)
};

// Two-loop recursion: returns H*g where H approximates the inverse Hessian.
VecX apply_inverse(const std::deque<Pair>& pairs, const VecX& g) {
  VecX q = g;
  const int k = static_cast<int>(pairs.size());
  std::vector<Scalar> alpha(k);
  for (int i = k - 1; i >= 0; --i) {
    alpha[i] = pairs[i].rho * pairs[i].s.dot(q);
    q -= alpha[i] * pairs[i].y;
  }
  if (k > 0) {
    const Pair& last = pairs.back();
    const Scalar yy = last.y.squaredNorm();
    if (yy > 0) q *= last.s.dot(last.y) / yy;
  }
  for (int i = 0; i < k; ++i) {
    const Scalar beta = pairs[i].rho * pairs[i].y.dot(q);
    q += (alpha[i] - beta) * pairs[i].s;
  }
  return q;
}

struct Trial {
  Scalar a = 0, f = 0, dphi = 0;
  VecX x, g;
  bool valid = false;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& fg, const VecX& x0,
                           const Projector& project, const LbfgsConfig& cfg,
                           const IterationCallback& cb) {
  VecX x = project ? project(x0) : x0;
  VecX g(x.size());
  Scalar f = fg(x, g);

  LbfgsResult result;
  result.x = x;
  result.f = f;
  if (cb) cb(0, x, f, g);

  if (g.lpNorm<Eigen::Infinity>() < cfg.tol_grad_inf) {
    result.reason = StopReason::gradient;
    return result;
  }

  std::deque<Pair> pairs;

  auto evaluate = [&](Scalar a, const VecX& d, const VecX& gdir) {
    Trial t;
    t.a = a;
    t.x = x + a * d;
    t.g.resize(x.size());
    t.f = fg(t.x, t.g);
    t.dphi = t.g.dot(gdir);
    t.valid = true;
    return t;
  };

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    VecX d = -apply_inverse(pairs, g);
    Scalar dphi0 = g.dot(d);
    if (!(dphi0 < 0)) {
      // Stale curvature produced a non-descent direction; restart.
      pairs.clear();
      d = -g;
      dphi0 = -g.squaredNorm();
      if (!(dphi0 < 0)) {
        result.reason = StopReason::line_search_failed;
        return result;
      }
    }

    // Strong Wolfe line search: bracketing walk, then bisection zoom.
    const Scalar phi0 = f;
    int evals_left = cfg.max_line_trials;
    Trial accepted;

    auto wolfe_ok = [&](const Trial& t) {
      return t.f <= phi0 + cfg.c1 * t.a * dphi0 &&
             std::abs(t.dphi) <= -cfg.c2 * dphi0;
    };

    auto zoom = [&](Trial lo, Trial hi) {
      while (evals_left > 0) {
        --evals_left;
        Trial t = evaluate(0.5 * (lo.a + hi.a), d, d);
        if (t.f > phi0 + cfg.c1 * t.a * dphi0 || t.f >= lo.f) {
          hi = t;
        } else {
          if (std::abs(t.dphi) <= -cfg.c2 * dphi0) return t;
          if (t.dphi * (hi.a - lo.a) >= 0) hi = lo;
          lo = t;
        }
        if (std::abs(hi.a - lo.a) < 1e-16 * std::max<Scalar>(1, lo.a)) break;
      }
      return Trial{};
    };

    Trial prev;
    prev.a = 0;
    prev.f = phi0;
    prev.dphi = dphi0;
    Scalar a = cfg.initial_step;
    bool first = true;
    while (evals_left > 0) {
      --evals_left;
      Trial t = evaluate(a, d, d);
      if (!std::isfinite(t.f) || t.f > phi0 + cfg.c1 * t.a * dphi0 ||
          (!first && t.f >= prev.f)) {
        accepted = zoom(prev, t);
        break;
      }
      if (std::abs(t.dphi) <= -cfg.c2 * dphi0) {
        accepted = t;
        break;
      }
      if (t.dphi >= 0) {
        accepted = zoom(t, prev);
        break;
      }
      prev = t;
      a *= 2;
      first = false;
    }

    if (!accepted.valid || !wolfe_ok(accepted)) {
      result.reason = StopReason::line_search_failed;
      return result;
    }

    // Pull the step back into the box.
    VecX x_new = project ? project(accepted.x) : accepted.x;
    Scalar f_new;
    VecX g_new;
    const bool moved =
        project && (x_new - accepted.x).lpNorm<Eigen::Infinity>() > cfg.projection_eps;
    if (moved) {
      pairs.clear();
      g_new.resize(x.size());
      f_new = fg(x_new, g_new);
    } else {
      f_new = accepted.f;
      g_new = std::move(accepted.g);
      VecX s = x_new - x;
      VecX y = g_new - g;
      const Scalar sy = s.dot(y);
      if (sy > cfg.curvature_floor * s.norm() * y.norm()) {
        pairs.push_back({std::move(s), std::move(y), 1 / sy});
        if (static_cast<int>(pairs.size()) > cfg.memory) pairs.pop_front();
      }
    }

    const Scalar f_prev = f;
    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    result.iterations = iter;
    if (f < result.f) {
      result.f = f;
      result.x = x;
    }
    if (cb) cb(iter, x, f, g);

    if (g.lpNorm<Eigen::Infinity>() < cfg.tol_grad_inf) {
      result.reason = StopReason::gradient;
      return result;
    }
    if (std::abs(f_prev - f) < cfg.tol_f_delta) {
      result.reason = StopReason::f_delta;
      return result;
    }
  }
  result.reason = StopReason::max_iters;
  return result;
}

}  // namespace forbes
