#pragma once

#include <functional>

#include "forbes/types.hpp"

namespace forbes {

// Projected limited-memory BFGS with a strong Wolfe line search.
//
// The search itself is unconstrained; after a step is accepted the iterate
// is pushed back into the feasible box by the projector. If projection
// actually moved the point, the curvature history no longer describes the
// local model and is discarded. Curvature pairs with s.y too small relative
// to |s||y| are rejected to keep the inverse Hessian estimate positive
// definite.
struct LbfgsConfig {
  int memory = 10;            // stored curvature pairs
  int max_iters = 20;         // accepted steps
  Scalar c1 = 1e-4;           // sufficient decrease
  Scalar c2 = 0.9;            // curvature condition
  int max_line_trials = 20;   // objective evaluations per line search
  Scalar initial_step = 1.0;
  Scalar tol_f_delta = 1e-6;  // stop when |f_prev - f| drops below
  Scalar tol_grad_inf = 1e-6; // stop when the gradient infinity norm drops below
  Scalar curvature_floor = 1e-10;
  Scalar projection_eps = 1e-12;
};

enum class StopReason { gradient, f_delta, max_iters, line_search_failed };
const char* to_string(StopReason r);

struct LbfgsResult {
  VecX x;          // lowest-f feasible iterate seen
  Scalar f = 0;
  int iterations = 0;  // accepted steps
  StopReason reason = StopReason::max_iters;
};

// Evaluates f at x and fills the gradient.
using Objective = std::function<Scalar(const VecX&, VecX&)>;
// Maps any point to the feasible set; must be idempotent.
using Projector = std::function<VecX(const VecX&)>;
// Observes every accepted iterate, including the initial point as iter 0.
using IterationCallback = std::function<void(int iter, const VecX& x, Scalar f, const VecX& g)>;

LbfgsResult lbfgs_minimize(const Objective& fg, const VecX& x0,
                           const Projector& project, const LbfgsConfig& cfg = {},
                           const IterationCallback& cb = {});

}  // namespace forbes
