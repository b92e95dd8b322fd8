#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "forbes/optimize.hpp"

namespace forbes {

// One CLI invocation's worth of settings, shared by the obfuscate,
// eval-pair, grad-check, and sweep verbs (each reads the fields it needs).
struct JobConfig {
  std::string input_path;
  std::string output_path;
  std::string metrics_path;

  std::optional<std::uint64_t> seed;  // entropy when unset; echoed either way
  int block_rows = 7, block_cols = 7;

  // "builtin" or "external:<command>". Empty defaults to the builtin
  // embedder whenever a feature energy is enabled.
  std::vector<std::string> extractor_specs;
  std::vector<Scalar> extractor_weights;  // empty means all ones

  EnergyFlags energies;
  StageOptions stages;
  std::map<int, Scalar> margins;  // transform id -> margin override

  int iters = 20;
  int workers = 1;
  Scalar h = 1e-4;      // grad-check step
  Scalar tol = 1e-3;    // grad-check per-coordinate relative tolerance
  int retries = 0;      // extra attempts when the feature energies fail to drop
};

// "all", "none", "hi-only", "md-only", or a comma list of u,c,d,s.
EnergyFlags parse_energies(const std::string& text);
// "all" or a comma list of averaging,warping,noising,scaling. The clamp
// choice is not part of this.
StageOptions parse_categories(const std::string& text);

// Registry with the margin overrides applied. Only warping, sinusoid,
// speckle, and color scaling accept one.
TransformRegistry build_registry(const JobConfig& cfg);
ExtractorList build_extractors(const JobConfig& cfg);

// Throws ConfigError on inconsistent settings.
void validate(const JobConfig& cfg);

struct ObfuscateOutcome {
  Image output;
  OptimizeResult opt;
  std::uint64_t seed_base = 0;
  std::uint64_t seed_used = 0;
  int attempts = 1;
  nlohmann::json metrics;
};

// Full pipeline: load, draw parameters, refine, render, save image and
// metrics (when paths are set). With retries > 0 and a feature energy
// enabled, attempts seed, seed+1, ... until the final feature energy beats
// the initial one, keeping the best attempt seen.
ObfuscateOutcome run_obfuscate(const JobConfig& cfg);

// Feature-space and pixel-space comparison of two images.
nlohmann::json run_eval_pair(const JobConfig& cfg, const std::string& path_a,
                             const std::string& path_b);

struct GradCheckOutcome {
  FdReport report;
  nlohmann::json metrics;
};

// Central-difference validation of the analytic gradient at a fresh
// parameter draw. Without an input path a synthetic 56x56 image is used.
GradCheckOutcome run_grad_check(const JobConfig& cfg);

// Shared by obfuscate and sweep.
nlohmann::json history_json(const std::vector<EnergyReport>& history);
nlohmann::json config_json(const JobConfig& cfg);

}  // namespace forbes
