#include "forbes/job.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "forbes/composite.hpp"
#include "forbes/errors.hpp"
#include "forbes/ppm.hpp"
#include "forbes/rng.hpp"

namespace forbes {

namespace {

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::vector<std::string> effective_specs(const JobConfig& cfg) {
  if (!cfg.extractor_specs.empty()) return cfg.extractor_specs;
  if (cfg.energies.md()) return {"builtin"};
  return {};
}

nlohmann::json field_json(const Array2D& a) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::json channel_field_json(const ChannelField& f) {
  nlohmann::json j = nlohmann::json::array();
  for (const Array2D& ch : f) j.push_back(field_json(ch));
  return j;
}

nlohmann::json triple_field_json(const TripleField& f) {
  nlohmann::json j = nlohmann::json::array();
  for (const ChannelField& w : f.w) j.push_back(channel_field_json(w));
  return j;
}

nlohmann::json params_json(const ParameterSet& p) {
  nlohmann::json j;
  j["warp_x"] = field_json(p.warp_x);
  j["warp_y"] = field_json(p.warp_y);
  j["theta5"] = channel_field_json(p.theta5);
  j["theta7"] = channel_field_json(p.theta7);
  j["theta8"] = channel_field_json(p.theta8);
  j["phi1"] = triple_field_json(p.phi1);
  j["phi2"] = triple_field_json(p.phi2);
  return j;
}

nlohmann::json finite_or_null(Scalar v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

struct PairStats {
  Scalar cosine = 0, distance = 0;
};

PairStats compare_features(const FeatureVector& out, const FeatureVector& in) {
  PairStats s;
  s.distance = distance_energy(out, in);
  s.cosine = 1.0 - cosine_energy(out, in);
  return s;
}

}  // namespace

EnergyFlags parse_energies(const std::string& text) {
  EnergyFlags f{false, false, false, false};
  if (text == "all") return EnergyFlags{true, true, true, true};
  if (text == "none") return f;
  if (text == "hi-only") return EnergyFlags{true, true, false, false};
  if (text == "md-only") return EnergyFlags{false, false, true, true};
  for (const std::string& tok : split_csv(text)) {
    if (tok == "u")
      f.u = true;
    else if (tok == "c")
      f.c = true;
    else if (tok == "d")
      f.d = true;
    else if (tok == "s")
      f.s = true;
    else
      throw ConfigError("unknown energy term '" + tok + "'");
  }
  if (text.empty()) throw ConfigError("empty energy selection");
  return f;
}

StageOptions parse_categories(const std::string& text) {
  StageOptions s;
  if (text == "all") return s;
  s.averaging = s.warping = s.noising = s.scaling = false;
  if (text.empty()) throw ConfigError("empty category selection");
  for (const std::string& tok : split_csv(text)) {
    if (tok == "averaging")
      s.averaging = true;
    else if (tok == "warping")
      s.warping = true;
    else if (tok == "noising")
      s.noising = true;
    else if (tok == "scaling")
      s.scaling = true;
    else
      throw ConfigError("unknown category '" + tok + "'");
  }
  return s;
}

TransformRegistry build_registry(const JobConfig& cfg) {
  TransformRegistry reg = TransformRegistry::standard();
  for (const auto& [id, margin] : cfg.margins) {
    if (id != 4 && id != 5 && id != 7 && id != 8)
      throw ConfigError("margin overrides apply to f4, f5, f7, f8 only");
    reg.set_margin(id, margin);
  }
  return reg;
}

ExtractorList build_extractors(const JobConfig& cfg) {
  ExtractorList list;
  for (const std::string& spec : effective_specs(cfg)) list.push_back(make_extractor(spec));
  return list;
}

void validate(const JobConfig& cfg) {
  if (cfg.block_rows < 1 || cfg.block_cols < 1)
    throw ConfigError("block grid must be at least 1x1");
  if (cfg.iters < 0) throw ConfigError("iteration budget must be non-negative");
  if (cfg.workers < 1) throw ConfigError("worker count must be positive");
  if (cfg.retries < 0) throw ConfigError("retry count must be non-negative");
  if (!(cfg.stages.averaging || cfg.stages.warping || cfg.stages.noising ||
        cfg.stages.scaling))
    throw ConfigError("at least one category must be enabled");
  const auto specs = effective_specs(cfg);
  if (!cfg.extractor_weights.empty() && cfg.extractor_weights.size() != specs.size())
    throw ConfigError("extractor weight count must match extractor count");
  for (Scalar w : cfg.extractor_weights)
    if (!std::isfinite(w) || w < 0) throw ConfigError("extractor weights must be finite and non-negative");
  for (const auto& [id, margin] : cfg.margins) {
    if (id != 4 && id != 5 && id != 7 && id != 8)
      throw ConfigError("margin overrides apply to f4, f5, f7, f8 only");
    if (!std::isfinite(margin) || margin < 0)
      throw ConfigError("margins must be finite and non-negative");
  }
}

nlohmann::json history_json(const std::vector<EnergyReport>& history) {
  nlohmann::json arr = nlohmann::json::array();
  for (const EnergyReport& r : history) {
    nlohmann::json j;
    j["iter"] = r.iter;
    j["e_u"] = r.e_u;
    j["e_c"] = r.e_c;
    j["e_d"] = r.e_d;
    j["e_s"] = r.e_s;
    j["total"] = r.total;
    j["grad_inf"] = r.grad_inf;
    arr.push_back(std::move(j));
  }
  return arr;
}

nlohmann::json config_json(const JobConfig& cfg) {
  nlohmann::json j;
  j["blocks"] = {cfg.block_rows, cfg.block_cols};
  nlohmann::json cats = nlohmann::json::array();
  if (cfg.stages.averaging) cats.push_back("averaging");
  if (cfg.stages.warping) cats.push_back("warping");
  if (cfg.stages.noising) cats.push_back("noising");
  if (cfg.stages.scaling) cats.push_back("scaling");
  j["categories"] = std::move(cats);
  j["clamp"] = cfg.stages.clamp_in_forward ? "forward" : "render";
  nlohmann::json terms = nlohmann::json::array();
  if (cfg.energies.u) terms.push_back("u");
  if (cfg.energies.c) terms.push_back("c");
  if (cfg.energies.d) terms.push_back("d");
  if (cfg.energies.s) terms.push_back("s");
  j["energies"] = std::move(terms);
  j["extractors"] = effective_specs(cfg);
  j["weights"] = cfg.extractor_weights;
  j["iters"] = cfg.iters;
  j["retries"] = cfg.retries;
  j["workers"] = cfg.workers;
  const TransformRegistry reg = build_registry(cfg);
  nlohmann::json margins;
  for (int id : {4, 5, 7, 8}) margins["f" + std::to_string(id)] = reg.get(id).margin;
  j["margins"] = std::move(margins);
  return j;
}

ObfuscateOutcome run_obfuscate(const JobConfig& cfg) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  const Image input = load_ppm(cfg.input_path);
  const TransformRegistry reg = build_registry(cfg);
  const BlockGrid grid = make_grid(input.rows, input.cols, cfg.block_rows, cfg.block_cols);
  ExtractorList extractors = build_extractors(cfg);

  LbfgsConfig lcfg;
  lcfg.max_iters = cfg.iters;

  ObfuscationObjective obj(input, grid, extractors, cfg.energies, cfg.stages, reg,
                           cfg.extractor_weights);

  const std::uint64_t base = cfg.seed ? *cfg.seed : entropy_seed();
  const bool can_retry = cfg.energies.md() && !extractors.empty();
  const int max_attempts = can_retry ? cfg.retries + 1 : 1;

  ObfuscateOutcome best;
  nlohmann::json best_features;
  Scalar best_md = std::numeric_limits<Scalar>::infinity();
  bool have_best = false;

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const std::uint64_t seed = base + static_cast<std::uint64_t>(attempt);
    const ParameterSet p0 = init_parameters(grid, seed, reg);
    OptimizeResult res = optimize(obj, p0, lcfg);

    // Feature comparisons at the initial draw and at the refined point.
    const PipelineTrace trace0 = forward(input, grid, p0, cfg.stages);
    const ParameterSet theta_star = obj.materialize(res.v_star);
    const PipelineTrace trace1 = forward(input, grid, theta_star, cfg.stages);

    Scalar md_init = 0, md_final = 0;
    nlohmann::json features = nlohmann::json::array();
    for (size_t k = 0; k < extractors.size(); ++k) {
      const Scalar wk = cfg.extractor_weights.empty() ? 1.0 : cfg.extractor_weights[k];
      const FeatureVector& fin = obj.input_features()[k];
      const PairStats s0 = compare_features(extractors[k]->extract(trace0.i_out), fin);
      const PairStats s1 = compare_features(extractors[k]->extract(trace1.i_out), fin);
      md_init += wk * (s0.distance + (1.0 - s0.cosine));
      md_final += wk * (s1.distance + (1.0 - s1.cosine));
      nlohmann::json f;
      f["name"] = extractors[k]->name();
      f["dim"] = extractors[k]->dim();
      f["weight"] = wk;
      f["cosine_initial"] = s0.cosine;
      f["cosine_final"] = s1.cosine;
      f["distance_initial"] = s0.distance;
      f["distance_final"] = s1.distance;
      features.push_back(std::move(f));
    }

    const bool better = !have_best || (can_retry && md_final < best_md);
    if (better) {
      have_best = true;
      best_md = md_final;
      best.output = render(trace1);
      best.opt = std::move(res);
      best.seed_base = base;
      best.seed_used = seed;
      best.attempts = attempt + 1;
      best_features = std::move(features);
    }
    if (!can_retry || md_final < md_init) break;
  }

  const Scalar wall =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();

  nlohmann::json m;
  m["attempts"] = best.attempts;
  m["config"] = config_json(cfg);
  m["features"] = best_features;
  m["history"] = history_json(best.opt.history);
  m["iterations"] = best.opt.iterations;
  m["psnr_db"] = finite_or_null(psnr(input, best.output));
  m["seed"] = best.seed_base;
  m["seed_used"] = best.seed_used;
  m["stop_reason"] = to_string(best.opt.reason);
  m["theta_star"] = params_json(best.opt.theta_star);
  m["wall_ms"] = wall;
  best.metrics = std::move(m);

  if (!cfg.output_path.empty()) save_ppm(cfg.output_path, best.output);
  if (!cfg.metrics_path.empty()) {
    std::ofstream os(cfg.metrics_path);
    if (!os) throw IoError("cannot write metrics to " + cfg.metrics_path);
    os << best.metrics.dump(2) << '\n';
  }
  return best;
}

nlohmann::json run_eval_pair(const JobConfig& cfg, const std::string& path_a,
                             const std::string& path_b) {
  validate(cfg);
  const Image a = load_ppm(path_a);
  const Image b = load_ppm(path_b);
  if (!a.same_shape(b)) throw DimensionError("images differ in shape");

  ExtractorList extractors = build_extractors(cfg);
  nlohmann::json features = nlohmann::json::array();
  for (auto& ex : extractors) {
    const PairStats s = compare_features(ex->extract(b), ex->extract(a));
    nlohmann::json f;
    f["name"] = ex->name();
    f["dim"] = ex->dim();
    f["cosine"] = s.cosine;
    f["distance"] = s.distance;
    features.push_back(std::move(f));
  }

  nlohmann::json m;
  m["config"] = config_json(cfg);
  m["features"] = std::move(features);
  m["psnr_db"] = finite_or_null(psnr(a, b));
  return m;
}

GradCheckOutcome run_grad_check(const JobConfig& cfg) {
  validate(cfg);
  const std::uint64_t seed = cfg.seed ? *cfg.seed : entropy_seed();
  const Image input =
      cfg.input_path.empty() ? synth_image(56, 56, seed) : load_ppm(cfg.input_path);
  const TransformRegistry reg = build_registry(cfg);
  const BlockGrid grid = make_grid(input.rows, input.cols, cfg.block_rows, cfg.block_cols);
  ExtractorList extractors = build_extractors(cfg);
  const ParameterSet p0 = init_parameters(grid, seed, reg);

  GradCheckOutcome out;
  out.report = fd_check(input, grid, p0, extractors, cfg.energies, cfg.stages, reg,
                        cfg.h, cfg.tol, cfg.extractor_weights);

  nlohmann::json m;
  m["config"] = config_json(cfg);
  m["h"] = cfg.h;
  m["tol"] = cfg.tol;
  m["seed"] = seed;
  m["total"] = out.report.total;
  m["checked"] = out.report.checked;
  m["passed"] = out.report.passed;
  m["kink_adjacent"] = out.report.kink_adjacent;
  m["max_rel"] = finite_or_null(out.report.max_rel);
  m["mean_rel"] = finite_or_null(out.report.mean_rel);
  m["pass_fraction"] = out.report.pass_fraction;
  out.metrics = std::move(m);

  if (!cfg.metrics_path.empty()) {
    std::ofstream os(cfg.metrics_path);
    if (!os) throw IoError("cannot write metrics to " + cfg.metrics_path);
    os << out.metrics.dump(2) << '\n';
  }
  return out;
}

}  // namespace forbes
