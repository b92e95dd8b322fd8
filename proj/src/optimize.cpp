#include "forbes/optimize.hpp"

namespace forbes {

OptimizeResult optimize(ObfuscationObjective& obj, const ParameterSet& p0,
                        const LbfgsConfig& cfg) {
  OptimizeResult out;
  const ParamLayout& layout = obj.layout();

  Objective fg = [&](const VecX& v, VecX& g) { return obj.value_and_grad(v, g); };
  Projector proj = [&](const VecX& v) { return project_box(v, layout); };
  IterationCallback cb = [&](int iter, const VecX& v, Scalar /*f*/, const VecX& g) {
    EnergyReport r = obj.report(v, iter);
    r.grad_inf = g.size() ? g.lpNorm<Eigen::Infinity>() : 0;
    out.history.push_back(r);
  };

  LbfgsResult res = lbfgs_minimize(fg, flatten(p0, layout), proj, cfg, cb);
  out.v_star = res.x;
  out.theta_star = unflatten(res.x, layout, p0);
  out.best_energy = res.f;
  out.iterations = res.iterations;
  out.reason = res.reason;
  return out;
}

}  // namespace forbes
