#pragma once

#include <iosfwd>

#include "forbes/job.hpp"

namespace forbes {

enum class SweepAxis { blocks, margin, energies, categories };

SweepAxis parse_axis(const std::string& text);

struct SweepOptions {
  SweepAxis axis = SweepAxis::blocks;
  // "lo:hi:step", inclusive of hi when the step lands on it. Empty picks the
  // default for the axis: 4:28:3 for blocks; 0:0.3:0.05 for margins, except
  // 1.0:1.1:0.02 for the multiplicative color-scale margin. Ignored by the
  // energies and categories axes, which enumerate fixed combinations.
  std::string range;
  int margin_transform = 4;  // which transform the margin axis varies
};

struct SweepRow {
  int index = 0;
  std::string value;  // axis point label
  Scalar e_d = 0, e_s = 0, cosine = 0, psnr_db = 0;
  std::string status = "ok";
};

// Runs one obfuscation per axis point, each with its own extractor handles,
// and reports the final feature energies. Rows never abort the sweep: a
// failed point carries its error in `status` and NaN metrics. Row order is
// deterministic regardless of worker count.
std::vector<SweepRow> run_sweep(const JobConfig& base, const SweepOptions& opts);

// Tab-separated table with a header row.
void write_sweep_tsv(std::ostream& os, const SweepOptions& opts,
                     const std::vector<SweepRow>& rows);

}  // namespace forbes
