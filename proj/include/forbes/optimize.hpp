#pragma once

#include <vector>

#include "forbes/gradient.hpp"
#include "forbes/lbfgs.hpp"

namespace forbes {

struct OptimizeResult {
  ParameterSet theta_star;
  VecX v_star;
  Scalar best_energy = 0;
  int iterations = 0;
  StopReason reason = StopReason::max_iters;
  // Term breakdown per accepted iterate; entry 0 is the initial point.
  std::vector<EnergyReport> history;
};

// Refines the free parameters of p0 under the objective's enabled energies,
// staying inside the per-family boxes. Returns the best feasible iterate.
OptimizeResult optimize(ObfuscationObjective& obj, const ParameterSet& p0,
                        const LbfgsConfig& cfg = {});

}  // namespace forbes
