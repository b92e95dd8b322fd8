#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "forbes/composite.hpp"
#include "forbes/energy.hpp"
#include "forbes/errors.hpp"
#include "forbes/job.hpp"
#include "forbes/ppm.hpp"
#include "forbes/rng.hpp"
#include "forbes/sweep.hpp"

using namespace forbes;

namespace {

std::string tmp_path(const std::string& name) {
  static const std::string base =
      (std::filesystem::temp_directory_path() /
       ("forbes-app-" + std::to_string(::getpid()) + "-"))
          .string();
  return base + name;
}

std::string cli_binary() {
  const char* p = std::getenv("FORBES_CLI");
  REQUIRE_MESSAGE(p != nullptr, "FORBES_CLI must point at the command line tool");
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = cli_binary() + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Piecewise-constant image over a cells x cells grid, one random value per
// cell and channel. Cell edges align with the embedder's pooling grid when
// cells divides 8 evenly into the image extent.
Image block_image(int rows, int cols, int cells, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const BlockGrid g = make_grid(rows, cols, cells, cells);
  Image img(rows, cols);
  for (int c = 0; c < 3; ++c)
    for (int bi = 0; bi < cells; ++bi)
      for (int bj = 0; bj < cells; ++bj)
        img.chan[c]
            .block(g.row_offset[bi], g.col_offset[bj], g.row_extent[bi],
                   g.col_extent[bj])
            .setConstant(rng.uniform(0.05, 0.95));
  return img;
}

JobConfig base_config() {
  JobConfig cfg;
  cfg.block_rows = cfg.block_cols = 4;
  cfg.iters = 3;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_SUITE("app") {
  TEST_CASE("energy selections parse or refuse") {
    EnergyFlags f = parse_energies("all");
    CHECK((f.u && f.c && f.d && f.s));
    f = parse_energies("none");
    CHECK_FALSE(f.any());
    f = parse_energies("hi-only");
    CHECK((f.u && f.c && !f.d && !f.s));
    f = parse_energies("md-only");
    CHECK((!f.u && !f.c && f.d && f.s));
    f = parse_energies("u,s");
    CHECK((f.u && !f.c && !f.d && f.s));
    f = parse_energies("d");
    CHECK((!f.u && !f.c && f.d && !f.s));
    CHECK_THROWS_AS(parse_energies(""), ConfigError);
    CHECK_THROWS_AS(parse_energies("u,x"), ConfigError);
  }

  TEST_CASE("category selections parse or refuse") {
    StageOptions st = parse_categories("all");
    CHECK((st.averaging && st.warping && st.noising && st.scaling));
    CHECK_FALSE(st.clamp_in_forward);
    st = parse_categories("warping,scaling");
    CHECK((!st.averaging && st.warping && !st.noising && st.scaling));
    CHECK_THROWS_AS(parse_categories(""), ConfigError);
    CHECK_THROWS_AS(parse_categories("blur"), ConfigError);
  }

  TEST_CASE("inconsistent settings are refused") {
    JobConfig ok = base_config();
    CHECK_NOTHROW(validate(ok));

    JobConfig bad = ok;
    bad.block_rows = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = ok;
    bad.iters = -1;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = ok;
    bad.workers = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = ok;
    bad.retries = -1;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = ok;
    bad.extractor_specs = {"builtin"};
    bad.extractor_weights = {1.0, 2.0};
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = ok;
    bad.extractor_specs = {"builtin"};
    bad.extractor_weights = {-1.0};
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = ok;
    bad.margins[6] = 0.1;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = ok;
    bad.margins[4] = std::numeric_limits<Scalar>::quiet_NaN();
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = ok;
    bad.stages.averaging = bad.stages.warping = bad.stages.noising =
        bad.stages.scaling = false;
    CHECK_THROWS_AS(validate(bad), ConfigError);
  }

  TEST_CASE("margin overrides land in the registry") {
    JobConfig cfg = base_config();
    cfg.margins[4] = 0.2;
    cfg.margins[8] = 1.08;
    const TransformRegistry reg = build_registry(cfg);
    CHECK(reg.get(4).margin == 0.2);
    CHECK(reg.get(8).margin == 1.08);
    CHECK(reg.get(5).margin == 0.0);  // untouched defaults
    CHECK(reg.get(7).margin == 0.1);
  }

  TEST_CASE("extractor defaults follow the energy flags") {
    JobConfig cfg = base_config();
    ExtractorList ex = build_extractors(cfg);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0]->name() == "builtin");

    cfg.energies = parse_energies("hi-only");
    CHECK(build_extractors(cfg).empty());

    cfg.extractor_specs = {"builtin", "builtin"};
    CHECK(build_extractors(cfg).size() == 2);
  }

  TEST_CASE("pass-through obfuscation renders the raw draw") {
    const std::string in = tmp_path("pass-in.ppm");
    save_ppm(in, synth_image(28, 28, 1));

    JobConfig cfg = base_config();
    cfg.input_path = in;
    cfg.energies = parse_energies("none");
    const ObfuscateOutcome out = run_obfuscate(cfg);

    const Image input = load_ppm(in);
    const BlockGrid grid = make_grid(28, 28, 4, 4);
    const ParameterSet p0 = init_parameters(grid, 5, build_registry(cfg));
    const Image expect = render(forward(input, grid, p0, cfg.stages));
    for (int c = 0; c < 3; ++c)
      CHECK((out.output.chan[c] - expect.chan[c]).abs().maxCoeff() == 0.0);

    CHECK(out.metrics["iterations"] == 0);
    CHECK(out.metrics["stop_reason"] == "gradient");
    CHECK(out.metrics["seed"] == 5);
    CHECK(out.metrics["seed_used"] == 5);
    CHECK(out.metrics["attempts"] == 1);
    CHECK(out.metrics["history"].size() == 1);
    CHECK(out.metrics["config"]["energies"].empty());
  }

  TEST_CASE("obfuscation metrics mirror the in-memory result") {
    const std::string in = tmp_path("run-in.ppm");
    save_ppm(in, synth_image(28, 28, 2));

    JobConfig cfg = base_config();
    cfg.input_path = in;
    const ObfuscateOutcome out = run_obfuscate(cfg);
    const nlohmann::json& m = out.metrics;

    CHECK(m["iterations"].get<int>() == out.opt.iterations);
    REQUIRE(m["history"].size() == out.opt.history.size());
    for (size_t i = 0; i < out.opt.history.size(); ++i) {
      CHECK(m["history"][i]["iter"].get<int>() == out.opt.history[i].iter);
      CHECK(m["history"][i]["e_u"].get<Scalar>() == out.opt.history[i].e_u);
      CHECK(m["history"][i]["total"].get<Scalar>() == out.opt.history[i].total);
      CHECK(m["history"][i]["grad_inf"].get<Scalar>() == out.opt.history[i].grad_inf);
    }
    CHECK(m["theta_star"]["warp_x"][0][0].get<Scalar>() ==
          out.opt.theta_star.warp_x(0, 0));
    CHECK(m["theta_star"]["theta5"][1][2][3].get<Scalar>() ==
          out.opt.theta_star.theta5[1](2, 3));
    CHECK(m["theta_star"]["phi2"][2][0][1][1].get<Scalar>() ==
          out.opt.theta_star.phi2.w[2][0](1, 1));
    CHECK(m["psnr_db"].is_number());
    CHECK(m["features"][0]["name"] == "builtin");
    CHECK(m["features"][0]["dim"] == 64);
    CHECK(m["features"][0]["weight"] == 1.0);
    CHECK(m["config"]["blocks"][0] == 4);
    CHECK(m["config"]["margins"]["f4"] == 0.05);
    CHECK(m["config"]["extractors"][0] == "builtin");

    // The refined point must honor every box constraint.
    const TransformRegistry reg = build_registry(cfg);
    const ParamLayout L = make_layout(4, 4, reg);
    const VecX v = flatten(out.opt.theta_star, L);
    CHECK((project_box(v, L) - v).lpNorm<Eigen::Infinity>() == 0.0);
  }

  TEST_CASE("eval-pair reports identity and rejects mismatched shapes") {
    const std::string a = tmp_path("eval-a.ppm");
    const std::string b = tmp_path("eval-b.ppm");
    const std::string c = tmp_path("eval-c.ppm");
    save_ppm(a, synth_image(24, 24, 3));
    save_ppm(b, synth_image(24, 24, 4));
    save_ppm(c, synth_image(24, 16, 5));

    JobConfig cfg;
    const nlohmann::json self = run_eval_pair(cfg, a, a);
    CHECK(self["features"][0]["cosine"].get<Scalar>() == doctest::Approx(1.0));
    CHECK(self["features"][0]["distance"].get<Scalar>() == 0.0);
    CHECK(self["psnr_db"].is_null());  // identical images: infinite PSNR

    const nlohmann::json other = run_eval_pair(cfg, a, b);
    CHECK(other["features"][0]["cosine"].get<Scalar>() < 1.0);
    CHECK(other["features"][0]["distance"].get<Scalar>() > 0.0);
    CHECK(other["psnr_db"].is_number());

    CHECK_THROWS_AS(run_eval_pair(cfg, a, c), DimensionError);
  }

  TEST_CASE("grad-check runs on a synthetic image by default") {
    JobConfig cfg = base_config();
    cfg.block_rows = cfg.block_cols = 2;
    const GradCheckOutcome out = run_grad_check(cfg);
    CHECK(out.report.total == 110);
    CHECK(out.report.pass_fraction >= 0.95);
    CHECK(out.metrics["seed"] == 5);
    CHECK(out.metrics["h"] == 1e-4);
    CHECK(out.metrics["pass_fraction"].get<Scalar>() == out.report.pass_fraction);
  }

  TEST_CASE("sweep visits every energy combination in a fixed order") {
    const std::string in = tmp_path("sweep-in.ppm");
    save_ppm(in, synth_image(28, 28, 6));
    JobConfig cfg = base_config();
    cfg.input_path = in;
    cfg.iters = 1;
    SweepOptions opts;
    opts.axis = parse_axis("energies");
    const std::vector<SweepRow> rows = run_sweep(cfg, opts);
    REQUIRE(rows.size() == 16);
    CHECK(rows[0].value == "none");
    CHECK(rows[3].value == "d");
    CHECK(rows[10].value == "ds");
    CHECK(rows[15].value == "ucds");
    for (const SweepRow& r : rows) {
      CAPTURE(r.value);
      CHECK(r.status == "ok");
      CHECK(std::isfinite(r.e_d));
      CHECK(std::isfinite(r.e_s));
      CHECK(std::isfinite(r.cosine));
    }
  }

  TEST_CASE("sweep nests the categories cumulatively") {
    const std::string in = tmp_path("sweep-cat.ppm");
    save_ppm(in, synth_image(28, 28, 7));
    JobConfig cfg = base_config();
    cfg.input_path = in;
    cfg.iters = 1;
    cfg.workers = 2;  // parallel execution must not disturb row order
    SweepOptions opts;
    opts.axis = parse_axis("categories");
    const std::vector<SweepRow> rows = run_sweep(cfg, opts);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].value == "averaging");
    CHECK(rows[3].value == "averaging+warping+noising+scaling");
    for (const SweepRow& r : rows) CHECK(r.status == "ok");
  }

  TEST_CASE("sweep failures stay contained in their row") {
    JobConfig cfg = base_config();
    cfg.input_path = tmp_path("does-not-exist.ppm");
    cfg.iters = 0;
    SweepOptions opts;
    opts.axis = parse_axis("blocks");
    opts.range = "4:7:3";
    const std::vector<SweepRow> rows = run_sweep(cfg, opts);
    REQUIRE(rows.size() == 2);
    for (const SweepRow& r : rows) {
      CHECK(r.status.rfind("error:", 0) == 0);
      CHECK(std::isnan(r.e_d));
    }
  }

  TEST_CASE("sweep tsv has a header and one line per row") {
    JobConfig cfg = base_config();
    SweepOptions opts;
    opts.axis = SweepAxis::blocks;
    std::vector<SweepRow> rows(2);
    rows[0].index = 0;
    rows[0].value = "4";
    rows[1].index = 1;
    rows[1].value = "7";
    std::ostringstream os;
    write_sweep_tsv(os, opts, rows);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "row\taxis\tvalue\te_d\te_s\tcosine\tpsnr_db\tstatus");
    int count = 0;
    while (std::getline(is, line)) {
      CHECK(line.rfind(std::to_string(count) + "\tblocks\t", 0) == 0);
      ++count;
    }
    CHECK(count == 2);
  }

  TEST_CASE("command line runs are deterministic") {
    const std::string in = tmp_path("cli-in.ppm");
    save_ppm(in, synth_image(28, 28, 8));
    const std::string o1 = tmp_path("cli-o1.ppm"), o2 = tmp_path("cli-o2.ppm");
    const std::string m1 = tmp_path("cli-m1.json"), m2 = tmp_path("cli-m2.json");
    const std::string args = " --seed 11 --blocks 4 4 --iters 3 --input " + in;
    CHECK(run_cli("obfuscate" + args + " --output " + o1 + " --metrics " + m1) == 0);
    CHECK(run_cli("obfuscate" + args + " --output " + o2 + " --metrics " + m2) == 0);
    CHECK(read_file(o1) == read_file(o2));

    const nlohmann::json j1 = nlohmann::json::parse(read_file(m1));
    const nlohmann::json j2 = nlohmann::json::parse(read_file(m2));
    CHECK(j1["theta_star"] == j2["theta_star"]);
    CHECK(j1["history"] == j2["history"]);
    CHECK(j1["features"] == j2["features"]);
    CHECK(j1["seed_used"] == 11);
  }

  TEST_CASE("failures map to documented exit codes") {
    const std::string in = tmp_path("codes-in.ppm");
    save_ppm(in, synth_image(16, 16, 9));

    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("obfuscate --input " + tmp_path("missing.ppm") + " --iters 0") == 2);
    CHECK(run_cli("eval-pair " + in + " " + in + " --extractor external:/bin/false") ==
          3);
    CHECK(run_cli("obfuscate --input " + in + " --energies bogus") == 4);
    CHECK(run_cli("obfuscate --input " + in + " --no-such-flag") == 4);
    CHECK(run_cli("grad-check --blocks 2 2 --seed 1 --h 0") == 4);
    CHECK(run_cli("sweep --input " + in + " --axis sideways") == 4);
  }

  TEST_CASE("obfuscation keeps the subject machine-identifiable") {
    // Six A/B pairs of block-structured faces: the refined obfuscation of A
    // must stay feature-closer to A than to B.
    const TransformRegistry reg = TransformRegistry::standard();
    int wins = 0;
    for (int trial = 0; trial < 6; ++trial) {
      const Image a = block_image(56, 56, 8, 2000 + static_cast<std::uint64_t>(trial));
      const Image b = block_image(56, 56, 8, 3000 + static_cast<std::uint64_t>(trial));
      const BlockGrid grid = make_grid(56, 56, 4, 4);
      ObfuscationObjective obj(a, grid, {make_builtin_embedder()}, EnergyFlags{}, {},
                               reg);
      LbfgsConfig cfg;
      cfg.max_iters = 4;
      const OptimizeResult res =
          optimize(obj, init_parameters(grid, 100 + static_cast<std::uint64_t>(trial), reg), cfg);
      const Image obf = render(forward(a, grid, res.theta_star, StageOptions{}));

      auto embed = make_builtin_embedder();
      const FeatureVector fo = embed->extract(obf);
      const Scalar to_a = cosine_energy(fo, embed->extract(a));
      const Scalar to_b = cosine_energy(fo, embed->extract(b));
      if (to_a < to_b) ++wins;
    }
    CHECK(wins >= 5);
  }
}
