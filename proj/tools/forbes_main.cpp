#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "forbes/errors.hpp"
#include "forbes/job.hpp"
#include "forbes/sweep.hpp"

namespace {

struct CliState {
  forbes::JobConfig cfg;
  std::string energies = "all";
  std::string categories = "all";
  std::string clamp = "render";
  std::vector<int> blocks;
  std::vector<std::string> margin_tokens;
};

void apply_parsed(CliState& st) {
  st.cfg.energies = forbes::parse_energies(st.energies);
  const bool clamp_forward = st.clamp == "forward";
  st.cfg.stages = forbes::parse_categories(st.categories);
  st.cfg.stages.clamp_in_forward = clamp_forward;
  if (!st.blocks.empty()) {
    st.cfg.block_rows = st.blocks[0];
    st.cfg.block_cols = st.blocks[1];
  }
  for (const std::string& tok : st.margin_tokens) {
    int id = 0;
    double margin = 0;
    char tail = 0;
    if (std::sscanf(tok.c_str(), "f%d=%lf%c", &id, &margin, &tail) != 2)
      throw forbes::ConfigError("margin override must look like f4=0.05, got '" + tok +
                                "'");
    st.cfg.margins[id] = margin;
  }
}

void add_model_flags(CLI::App* cmd, CliState& st) {
  cmd->add_option("--seed", st.cfg.seed, "RNG seed (default: fresh entropy)");
  cmd->add_option("--blocks", st.blocks, "block grid rows and columns (default 7 7)")
      ->expected(2);
  cmd->add_option("--extractor", st.cfg.extractor_specs,
                  "feature extractor: builtin or external:<command> (repeatable)");
  cmd->add_option("--extractor-weight", st.cfg.extractor_weights,
                  "per-extractor energy weight (repeatable, default 1)");
  cmd->add_option("--energies", st.energies,
                  "energy terms: all, none, hi-only, md-only, or a comma list of u,c,d,s");
  cmd->add_option("--categories", st.categories,
                  "transform categories: all or a comma list of "
                  "averaging,warping,noising,scaling");
  cmd->add_option("--margin", st.margin_tokens,
                  "margin override fN=value for f4, f5, f7, f8 (repeatable)");
  cmd->add_option("--clamp", st.clamp, "when to clamp to [0,1]: render or forward")
      ->check(CLI::IsMember({"render", "forward"}));
  cmd->add_option("--iters", st.cfg.iters, "optimizer iteration budget (default 20)");
}

int dispatch(CLI::App& app, CliState& st, CLI::App* obf, CLI::App* eval,
             CLI::App* grad, CLI::App* sweep, const std::string& eval_a,
             const std::string& eval_b, forbes::SweepOptions& sw_opts,
             const std::string& sweep_axis, const std::string& sweep_margin_tf,
             const std::string& sweep_out, double min_pass) {
  (void)app;
  apply_parsed(st);

  if (obf->parsed()) {
    const forbes::ObfuscateOutcome out = forbes::run_obfuscate(st.cfg);
    std::cout << "wrote " << st.cfg.output_path << " seed=" << out.seed_used
              << " iterations=" << out.metrics.at("iterations").get<int>()
              << " stop=" << out.metrics.at("stop_reason").get<std::string>() << '\n';
    return 0;
  }
  if (eval->parsed()) {
    const nlohmann::json m = forbes::run_eval_pair(st.cfg, eval_a, eval_b);
    if (!st.cfg.metrics_path.empty()) {
      std::ofstream os(st.cfg.metrics_path);
      if (!os) throw forbes::IoError("cannot write metrics to " + st.cfg.metrics_path);
      os << m.dump(2) << '\n';
    }
    std::cout << m.dump(2) << '\n';
    return 0;
  }
  if (grad->parsed()) {
    const forbes::GradCheckOutcome out = forbes::run_grad_check(st.cfg);
    std::printf("checked %d of %d coordinates (%d kink-adjacent skipped)\n",
                out.report.checked, out.report.total, out.report.kink_adjacent);
    std::printf("pass fraction %.6f  max rel %.3e  mean rel %.3e\n",
                out.report.pass_fraction, out.report.max_rel, out.report.mean_rel);
    return out.report.pass_fraction >= min_pass ? 0 : 1;
  }
  if (sweep->parsed()) {
    sw_opts.axis = forbes::parse_axis(sweep_axis);
    if (!sweep_margin_tf.empty()) {
      int id = 0;
      char tail = 0;
      if (std::sscanf(sweep_margin_tf.c_str(), "f%d%c", &id, &tail) != 1)
        throw forbes::ConfigError("margin transform must look like f4, got '" +
                                  sweep_margin_tf + "'");
      sw_opts.margin_transform = id;
    }
    const std::vector<forbes::SweepRow> rows = forbes::run_sweep(st.cfg, sw_opts);
    if (sweep_out.empty()) {
      forbes::write_sweep_tsv(std::cout, sw_opts, rows);
    } else {
      std::ofstream os(sweep_out);
      if (!os) throw forbes::IoError("cannot write sweep table to " + sweep_out);
      forbes::write_sweep_tsv(os, sw_opts, rows);
    }
    return 0;
  }
  return 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forbes: block-parameterized face obfuscation with feature-preserving "
               "parameter refinement"};
  app.require_subcommand(1);

  CliState st;
  std::string eval_a, eval_b;
  forbes::SweepOptions sw_opts;
  std::string sweep_axis, sweep_margin_tf, sweep_out;
  double min_pass = 0.0;

  CLI::App* obf = app.add_subcommand("obfuscate", "obfuscate one image");
  obf->add_option("--input", st.cfg.input_path, "input PPM (P6)")->required();
  obf->add_option("--output", st.cfg.output_path, "obfuscated PPM path");
  obf->add_option("--metrics", st.cfg.metrics_path, "metrics JSON path");
  obf->add_option("--retries", st.cfg.retries,
                  "extra seeds to try when the feature energies fail to improve");
  add_model_flags(obf, st);

  CLI::App* eval = app.add_subcommand("eval-pair", "compare two images in feature space");
  eval->add_option("a", eval_a, "first image (reference)")->required();
  eval->add_option("b", eval_b, "second image")->required();
  eval->add_option("--metrics", st.cfg.metrics_path, "metrics JSON path");
  eval->add_option("--extractor", st.cfg.extractor_specs,
                   "feature extractor (repeatable; default builtin)");

  CLI::App* grad = app.add_subcommand("grad-check",
                                      "compare the analytic gradient to finite "
                                      "differences at a random draw");
  grad->set_help_flag("--help", "print this help message and exit");  // frees -h for --h
  grad->add_option("--input", st.cfg.input_path,
                   "input PPM (default: synthetic 56x56 image)");
  grad->add_option("--metrics", st.cfg.metrics_path, "report JSON path");
  grad->add_option("--h", st.cfg.h, "central difference step (default 1e-4)");
  grad->add_option("--tol", st.cfg.tol, "per-coordinate relative tolerance");
  grad->add_option("--min-pass", min_pass, "exit nonzero below this pass fraction");
  add_model_flags(grad, st);

  CLI::App* sweep = app.add_subcommand("sweep", "one obfuscation per axis point");
  sweep->add_option("--input", st.cfg.input_path, "input PPM")->required();
  sweep->add_option("--axis", sweep_axis, "blocks, margin, energies, or categories")
      ->required();
  sweep->add_option("--range", sw_opts.range, "lo:hi:step for blocks/margin axes");
  sweep->add_option("--margin-transform", sweep_margin_tf,
                    "transform the margin axis varies (default f4)");
  sweep->add_option("--out", sweep_out, "TSV path (default stdout)");
  sweep->add_option("--workers", st.cfg.workers, "parallel rows (default 1)");
  sweep->add_option("--retries", st.cfg.retries,
                    "extra seeds per row when feature energies fail to improve");
  add_model_flags(sweep, st);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }

  try {
    return dispatch(app, st, obf, eval, grad, sweep, eval_a, eval_b, sw_opts,
                    sweep_axis, sweep_margin_tf, sweep_out, min_pass);
  } catch (const forbes::ProtocolError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const forbes::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const forbes::InvalidStepError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const forbes::DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const forbes::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const forbes::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
