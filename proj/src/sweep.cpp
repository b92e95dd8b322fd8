#include "forbes/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <thread>

#include "forbes/errors.hpp"

namespace forbes {

namespace {

constexpr Scalar kNaN = std::numeric_limits<Scalar>::quiet_NaN();

struct AxisPoint {
  std::string label;
  JobConfig cfg;
};

std::vector<Scalar> parse_range(const std::string& text) {
  Scalar lo = 0, hi = 0, step = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &lo, &hi, &step, &tail) != 3 ||
      !(step > 0) || hi < lo)
    throw ConfigError("range must be lo:hi:step with step > 0, got '" + text + "'");
  std::vector<Scalar> out;
  // Tolerate float drift so hi itself is included when the step divides.
  for (Scalar v = lo; v <= hi + step * 1e-9; v += step) out.push_back(v);
  return out;
}

std::string format_number(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Table order: singles, pairs, triples, then all four, within each size in
// u < c < d < s order.
constexpr struct {
  const char* label;
  bool u, c, d, s;
} kEnergyCombos[16] = {
    {"none", false, false, false, false},
    {"u", true, false, false, false},
    {"c", false, true, false, false},
    {"d", false, false, true, false},
    {"s", false, false, false, true},
    {"uc", true, true, false, false},
    {"ud", true, false, true, false},
    {"us", true, false, false, true},
    {"cd", false, true, true, false},
    {"cs", false, true, false, true},
    {"ds", false, false, true, true},
    {"ucd", true, true, true, false},
    {"ucs", true, true, false, true},
    {"uds", true, false, true, true},
    {"cds", false, true, true, true},
    {"ucds", true, true, true, true},
};

std::vector<AxisPoint> axis_points(const JobConfig& base, const SweepOptions& opts) {
  std::vector<AxisPoint> points;
  switch (opts.axis) {
    case SweepAxis::blocks: {
      for (Scalar v : parse_range(opts.range.empty() ? "4:28:3" : opts.range)) {
        const int b = static_cast<int>(std::lround(v));
        if (std::abs(v - b) > 1e-9 || b < 1)
          throw ConfigError("blocks range must step through positive integers");
        AxisPoint p{std::to_string(b), base};
        p.cfg.block_rows = p.cfg.block_cols = b;
        points.push_back(std::move(p));
      }
      break;
    }
    case SweepAxis::margin: {
      const int id = opts.margin_transform;
      if (id != 4 && id != 5 && id != 7 && id != 8)
        throw ConfigError("margin sweeps apply to f4, f5, f7, f8 only");
      const std::string def = id == 8 ? "1.0:1.1:0.02" : "0:0.3:0.05";
      for (Scalar v : parse_range(opts.range.empty() ? def : opts.range)) {
        AxisPoint p{format_number(v), base};
        p.cfg.margins[id] = v;
        points.push_back(std::move(p));
      }
      break;
    }
    case SweepAxis::energies: {
      for (const auto& combo : kEnergyCombos) {
        AxisPoint p{combo.label, base};
        p.cfg.energies = EnergyFlags{combo.u, combo.c, combo.d, combo.s};
        points.push_back(std::move(p));
      }
      break;
    }
    case SweepAxis::categories: {
      const char* labels[4] = {"averaging", "averaging+warping",
                               "averaging+warping+noising",
                               "averaging+warping+noising+scaling"};
      for (int k = 0; k < 4; ++k) {
        AxisPoint p{labels[k], base};
        p.cfg.stages.averaging = true;
        p.cfg.stages.warping = k >= 1;
        p.cfg.stages.noising = k >= 2;
        p.cfg.stages.scaling = k >= 3;
        points.push_back(std::move(p));
      }
      break;
    }
  }
  return points;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return s;
}

SweepRow execute_point(const AxisPoint& point, int index) {
  SweepRow row;
  row.index = index;
  row.value = point.label;
  try {
    const ObfuscateOutcome out = run_obfuscate(point.cfg);
    Scalar e_d = 0, e_s = 0, cos_sum = 0;
    const auto& feats = out.metrics.at("features");
    for (const auto& f : feats) {
      const Scalar w = f.at("weight").get<Scalar>();
      e_d += w * f.at("distance_final").get<Scalar>();
      e_s += w * (1.0 - f.at("cosine_final").get<Scalar>());
      cos_sum += f.at("cosine_final").get<Scalar>();
    }
    row.e_d = e_d;
    row.e_s = e_s;
    row.cosine = feats.empty() ? kNaN : cos_sum / static_cast<Scalar>(feats.size());
    const auto& p = out.metrics.at("psnr_db");
    row.psnr_db = p.is_null() ? kNaN : p.get<Scalar>();
  } catch (const std::exception& e) {
    row.e_d = row.e_s = row.cosine = row.psnr_db = kNaN;
    row.status = sanitize(std::string("error: ") + e.what());
  }
  return row;
}

}  // namespace

SweepAxis parse_axis(const std::string& text) {
  if (text == "blocks") return SweepAxis::blocks;
  if (text == "margin") return SweepAxis::margin;
  if (text == "energies") return SweepAxis::energies;
  if (text == "categories") return SweepAxis::categories;
  throw ConfigError("unknown sweep axis '" + text + "'");
}

std::vector<SweepRow> run_sweep(const JobConfig& base, const SweepOptions& opts) {
  validate(base);

  JobConfig shared = base;
  shared.output_path.clear();
  shared.metrics_path.clear();
  if (!shared.seed) {
    std::random_device rd;
    shared.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  // Feature columns must be comparable across rows, so every point measures
  // them even when its objective ignores the feature energies.
  if (shared.extractor_specs.empty()) shared.extractor_specs = {"builtin"};

  const std::vector<AxisPoint> points = axis_points(shared, opts);
  std::vector<SweepRow> rows(points.size());

  std::atomic<size_t> cursor{0};
  auto drain = [&] {
    for (size_t i; (i = cursor.fetch_add(1)) < points.size();)
      rows[i] = execute_point(points[i], static_cast<int>(i));
  };

  const size_t n_workers =
      std::min(points.size(), static_cast<size_t>(std::max(1, base.workers)));
  std::vector<std::thread> pool;
  for (size_t t = 1; t < n_workers; ++t) pool.emplace_back(drain);
  drain();
  for (std::thread& t : pool) t.join();
  return rows;
}

void write_sweep_tsv(std::ostream& os, const SweepOptions& opts,
                     const std::vector<SweepRow>& rows) {
  const char* axis_name = opts.axis == SweepAxis::blocks       ? "blocks"
                          : opts.axis == SweepAxis::margin     ? "margin"
                          : opts.axis == SweepAxis::energies   ? "energies"
                                                               : "categories";
  os << "row\taxis\tvalue\te_d\te_s\tcosine\tpsnr_db\tstatus\n";
  for (const SweepRow& r : rows) {
    os << r.index << '\t' << axis_name << '\t' << r.value << '\t'
       << format_number(r.e_d) << '\t' << format_number(r.e_s) << '\t'
       << format_number(r.cosine) << '\t' << format_number(r.psnr_db) << '\t'
       << r.status << '\n';
  }
}

}  // namespace forbes
