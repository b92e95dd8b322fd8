#include "forbes/params.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "forbes/errors.hpp"

namespace forbes {

int TransformSpec::param_count(int block_rows, int block_cols) const {
  if (id == 4) return (block_rows - 1) * (block_cols - 1) * 2;
  return block_rows * block_cols * 3;
}

TransformRegistry TransformRegistry::standard() {
  TransformRegistry r;
  r.specs_ = {{
      {1, "mosaicking", Category::averaging, 1.0, 1.0, 0.0, ParamKind::fixed},
      {2, "horizontal-mean", Category::averaging, 1.0, 1.0, 0.0, ParamKind::fixed},
      {3, "vertical-mean", Category::averaging, 1.0, 1.0, 0.0, ParamKind::fixed},
      {4, "warping", Category::warping, -0.3, 0.3, 0.05, ParamKind::uniform},
      {5, "sinusoid", Category::noising, 0.0, M_PI, 0.0, ParamKind::uniform},
      {6, "checkerboard", Category::noising, 1.0, 1.0, 0.0, ParamKind::fixed},
      {7, "speckle", Category::noising, -0.5, 0.5, 0.1, ParamKind::uniform},
      {8, "color-scaling", Category::scaling, 10.0 / 11.0, 11.0 / 10.0, 1.05,
       ParamKind::color},
  }};
  return r;
}

const TransformSpec& TransformRegistry::get(int id) const {
  if (id < 1 || id > 8) throw ConfigError("transform id out of range");
  return specs_[static_cast<size_t>(id - 1)];
}

void TransformRegistry::set_margin(int id, Scalar margin) {
  if (id < 1 || id > 8) throw ConfigError("transform id out of range");
  if (!(margin >= 0.0) || !std::isfinite(margin))
    throw ConfigError("margin must be finite and non-negative");
  specs_[static_cast<size_t>(id - 1)].margin = margin;
}

ChannelField make_channel_field(int block_rows, int block_cols, Scalar value) {
  ChannelField f;
  for (auto& a : f) a = Array2D::Constant(block_rows, block_cols, value);
  return f;
}

TripleField make_triple_field(int block_rows, int block_cols, Scalar value) {
  TripleField t;
  for (auto& f : t.w) f = make_channel_field(block_rows, block_cols, value);
  return t;
}

ParameterSet make_parameter_set(const BlockGrid& grid) {
  return make_parameter_set(grid.block_rows, grid.block_cols);
}

ParameterSet make_parameter_set(int m, int n) {
  if (m < 1 || n < 1) throw DimensionError("parameter grid must be at least 1x1");
  ParameterSet p;
  p.block_rows = m;
  p.block_cols = n;
  p.theta1 = make_channel_field(m, n, 1.0);
  p.theta2 = make_channel_field(m, n, 1.0);
  p.theta3 = make_channel_field(m, n, 1.0);
  p.theta6 = make_channel_field(m, n, 1.0);
  p.warp_x = Array2D::Zero(std::max(m - 1, 0), std::max(n - 1, 0));
  p.warp_y = p.warp_x;
  p.theta5 = make_channel_field(m, n, 0.0);
  p.theta7 = make_channel_field(m, n, 0.0);
  p.theta8 = make_channel_field(m, n, 0.0);
  p.phi1 = make_triple_field(m, n, 0.0);
  p.phi2 = make_triple_field(m, n, 0.0);
  return p;
}

int ParamLayout::family_of(int index) const {
  for (int f = 0; f < kFamilyCount; ++f)
    if (index >= seg[static_cast<size_t>(f)].offset &&
        index < seg[static_cast<size_t>(f)].offset + seg[static_cast<size_t>(f)].length)
      return f;
  throw LengthError("flat index out of range");
}

ParamLayout make_layout(const BlockGrid& grid, const TransformRegistry& reg) {
  return make_layout(grid.block_rows, grid.block_cols, reg);
}

ParamLayout make_layout(int m, int n, const TransformRegistry& reg) {
  ParamLayout L;
  L.block_rows = m;
  L.block_cols = n;

  auto fill = [&](Family fam, int transform_id, int length, bool boxed) {
    FamilySegment& s = L.seg[static_cast<size_t>(fam)];
    s.offset = L.size;
    s.length = length;
    s.boxed = boxed;
    s.transform_id = transform_id;
    if (transform_id != 0) {
      const TransformSpec& t = reg.get(transform_id);
      s.lower = t.theta_min;
      s.upper = t.theta_max;
      s.margin = t.margin;
    }
    L.size += length;
  };

  fill(kWarp, 4, reg.get(4).param_count(m, n), true);
  fill(kSinusoid, 5, reg.get(5).param_count(m, n), true);
  fill(kSpeckle, 7, reg.get(7).param_count(m, n), true);
  fill(kColorScale, 8, reg.get(8).param_count(m, n), true);
  fill(kComposeAvg, 0, m * n * 9, false);
  fill(kComposeNoise, 0, m * n * 9, false);
  return L;
}

namespace {

void check_shape(const ParameterSet& p, const ParamLayout& L) {
  if (p.block_rows != L.block_rows || p.block_cols != L.block_cols)
    throw DimensionError("parameter set does not match layout grid");
}

template <typename Fn>
void for_each_coord(const ParamLayout& L, Fn&& fn) {
  const int m = L.block_rows, n = L.block_cols;
  int k = L.seg[kWarp].offset;
  for (int gi = 0; gi < m - 1; ++gi)
    for (int gj = 0; gj < n - 1; ++gj) {
      fn(k++, kWarp, gi, gj, 0, 0);
      fn(k++, kWarp, gi, gj, 0, 1);
    }
  for (Family fam : {kSinusoid, kSpeckle, kColorScale}) {
    k = L.seg[static_cast<size_t>(fam)].offset;
    for (int bi = 0; bi < m; ++bi)
      for (int bj = 0; bj < n; ++bj)
        for (int c = 0; c < 3; ++c) fn(k++, fam, bi, bj, c, 0);
  }
  for (Family fam : {kComposeAvg, kComposeNoise}) {
    k = L.seg[static_cast<size_t>(fam)].offset;
    for (int bi = 0; bi < m; ++bi)
      for (int bj = 0; bj < n; ++bj)
        for (int c = 0; c < 3; ++c)
          for (int w = 0; w < 3; ++w) fn(k++, fam, bi, bj, c, w);
  }
}

Scalar& entry(ParameterSet& p, Family fam, int bi, int bj, int c, int w) {
  switch (fam) {
    case kWarp: return w == 0 ? p.warp_x(bi, bj) : p.warp_y(bi, bj);
    case kSinusoid: return p.theta5[static_cast<size_t>(c)](bi, bj);
    case kSpeckle: return p.theta7[static_cast<size_t>(c)](bi, bj);
    case kColorScale: return p.theta8[static_cast<size_t>(c)](bi, bj);
    case kComposeAvg: return p.phi1.w[static_cast<size_t>(w)][static_cast<size_t>(c)](bi, bj);
    case kComposeNoise: return p.phi2.w[static_cast<size_t>(w)][static_cast<size_t>(c)](bi, bj);
    default: throw LengthError("bad family");
  }
}

Scalar entry(const ParameterSet& p, Family fam, int bi, int bj, int c, int w) {
  return entry(const_cast<ParameterSet&>(p), fam, bi, bj, c, w);
}

}  // namespace

VecX flatten(const ParameterSet& p, const ParamLayout& layout) {
  check_shape(p, layout);
  VecX v(layout.size);
  for_each_coord(layout, [&](int k, Family fam, int bi, int bj, int c, int w) {
    v[k] = entry(p, fam, bi, bj, c, w);
  });
  return v;
}

ParameterSet unflatten(const VecX& v, const ParamLayout& layout,
                       const ParameterSet& fixed_template) {
  check_shape(fixed_template, layout);
  if (v.size() != layout.size)
    throw LengthError("flat vector has length " + std::to_string(v.size()) +
                      ", layout expects " + std::to_string(layout.size));
  ParameterSet p = fixed_template;
  for_each_coord(layout, [&](int k, Family fam, int bi, int bj, int c, int w) {
    entry(p, fam, bi, bj, c, w) = v[k];
  });
  return p;
}

VecX project_box(VecX v, const ParamLayout& layout) {
  if (v.size() != layout.size) throw LengthError("flat vector length mismatch");
  for (const FamilySegment& s : layout.seg) {
    if (!s.boxed) continue;
    for (int i = s.offset; i < s.offset + s.length; ++i)
      v[i] = std::fmin(s.upper, std::fmax(s.lower, v[i]));
  }
  return v;
}

namespace {

void write_field(std::ostream& os, const std::string& name,
                 const std::vector<int>& dims, const std::vector<Scalar>& vals) {
  os << "family " << name << " dims";
  for (int d : dims) os << ' ' << d;
  os << '\n';
  char buf[64];
  for (size_t i = 0; i < vals.size(); ++i) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), vals[i],
                                   std::chars_format::general, 17);
    (void)ec;
    os.write(buf, end - buf);
    os << ((i + 1) % 8 == 0 || i + 1 == vals.size() ? '\n' : ' ');
  }
}

std::vector<Scalar> channel_values(const ChannelField& f) {
  std::vector<Scalar> out;
  const int m = static_cast<int>(f[0].rows()), n = static_cast<int>(f[0].cols());
  for (int bi = 0; bi < m; ++bi)
    for (int bj = 0; bj < n; ++bj)
      for (int c = 0; c < 3; ++c) out.push_back(f[static_cast<size_t>(c)](bi, bj));
  return out;
}

std::vector<Scalar> triple_values(const TripleField& t) {
  std::vector<Scalar> out;
  const int m = static_cast<int>(t.w[0][0].rows()), n = static_cast<int>(t.w[0][0].cols());
  for (int bi = 0; bi < m; ++bi)
    for (int bj = 0; bj < n; ++bj)
      for (int c = 0; c < 3; ++c)
        for (int k = 0; k < 3; ++k)
          out.push_back(t.w[static_cast<size_t>(k)][static_cast<size_t>(c)](bi, bj));
  return out;
}

}  // namespace

void save_params_text(std::ostream& os, const ParameterSet& p) {
  const int m = p.block_rows, n = p.block_cols;
  os << "forbes-params 1\n";
  os << "grid " << m << ' ' << n << '\n';
  write_field(os, "theta1", {m, n, 3}, channel_values(p.theta1));
  write_field(os, "theta2", {m, n, 3}, channel_values(p.theta2));
  write_field(os, "theta3", {m, n, 3}, channel_values(p.theta3));
  {
    std::vector<Scalar> vals;
    for (int gi = 0; gi < m - 1; ++gi)
      for (int gj = 0; gj < n - 1; ++gj) {
        vals.push_back(p.warp_x(gi, gj));
        vals.push_back(p.warp_y(gi, gj));
      }
    write_field(os, "theta4", {m - 1, n - 1, 2}, vals);
  }
  write_field(os, "theta5", {m, n, 3}, channel_values(p.theta5));
  write_field(os, "theta6", {m, n, 3}, channel_values(p.theta6));
  write_field(os, "theta7", {m, n, 3}, channel_values(p.theta7));
  write_field(os, "theta8", {m, n, 3}, channel_values(p.theta8));
  write_field(os, "phi1", {m, n, 3, 3}, triple_values(p.phi1));
  write_field(os, "phi2", {m, n, 3, 3}, triple_values(p.phi2));
}

namespace {

struct FieldRecord {
  std::vector<int> dims;
  std::vector<Scalar> vals;
};

FieldRecord read_field(std::istream& is, const std::string& expect_name) {
  std::string kw, name, dimkw;
  if (!(is >> kw >> name >> dimkw) || kw != "family" || dimkw != "dims" ||
      name != expect_name)
    throw FormatError("bad parameter record, expected family " + expect_name);
  FieldRecord rec;
  // dims line ends at newline; read ints until the line break
  std::string line;
  std::getline(is, line);
  size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && line[pos] == ' ') ++pos;
    size_t start = pos;
    while (pos < line.size() && line[pos] != ' ') ++pos;
    if (pos > start) rec.dims.push_back(std::stoi(line.substr(start, pos - start)));
  }
  long count = 1;
  for (int d : rec.dims) count *= d;
  rec.vals.resize(static_cast<size_t>(std::max(count, 0L)));
  for (auto& v : rec.vals)
    if (!(is >> v)) throw FormatError("truncated values for " + expect_name);
  return rec;
}

void fill_channel(ChannelField& f, const FieldRecord& rec, int m, int n) {
  if (rec.dims != std::vector<int>{m, n, 3}) throw FormatError("dims mismatch");
  size_t k = 0;
  for (int bi = 0; bi < m; ++bi)
    for (int bj = 0; bj < n; ++bj)
      for (int c = 0; c < 3; ++c) f[static_cast<size_t>(c)](bi, bj) = rec.vals[k++];
}

void fill_triple(TripleField& t, const FieldRecord& rec, int m, int n) {
  if (rec.dims != std::vector<int>{m, n, 3, 3}) throw FormatError("dims mismatch");
  size_t k = 0;
  for (int bi = 0; bi < m; ++bi)
    for (int bj = 0; bj < n; ++bj)
      for (int c = 0; c < 3; ++c)
        for (int w = 0; w < 3; ++w)
          t.w[static_cast<size_t>(w)][static_cast<size_t>(c)](bi, bj) = rec.vals[k++];
}

}  // namespace

ParameterSet load_params_text(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "forbes-params" || version != 1)
    throw FormatError("not a forbes-params document");
  std::string gridkw;
  int m = 0, n = 0;
  if (!(is >> gridkw >> m >> n) || gridkw != "grid" || m < 1 || n < 1)
    throw FormatError("bad grid record");

  ParameterSet p = make_parameter_set(m, n);
  fill_channel(p.theta1, read_field(is, "theta1"), m, n);
  fill_channel(p.theta2, read_field(is, "theta2"), m, n);
  fill_channel(p.theta3, read_field(is, "theta3"), m, n);
  {
    FieldRecord rec = read_field(is, "theta4");
    if (rec.dims != std::vector<int>{m - 1, n - 1, 2}) throw FormatError("dims mismatch");
    size_t k = 0;
    for (int gi = 0; gi < m - 1; ++gi)
      for (int gj = 0; gj < n - 1; ++gj) {
        p.warp_x(gi, gj) = rec.vals[k++];
        p.warp_y(gi, gj) = rec.vals[k++];
      }
  }
  fill_channel(p.theta5, read_field(is, "theta5"), m, n);
  fill_channel(p.theta6, read_field(is, "theta6"), m, n);
  fill_channel(p.theta7, read_field(is, "theta7"), m, n);
  fill_channel(p.theta8, read_field(is, "theta8"), m, n);
  fill_triple(p.phi1, read_field(is, "phi1"), m, n);
  fill_triple(p.phi2, read_field(is, "phi2"), m, n);
  return p;
}

}  // namespace forbes
