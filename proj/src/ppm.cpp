#include "forbes/ppm.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

#include "forbes/errors.hpp"

namespace forbes {

namespace {

// Reads one header token, skipping whitespace and '#' comments before it.
// The single byte that terminates the token is consumed; the raster begins
// right after the byte that ends the maxval token.
std::string next_token(std::istream& in) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  if (ch == EOF) throw FormatError("truncated PPM header");
  std::string tok;
  while (ch != EOF && !std::isspace(ch)) {
    tok.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  if (ch == EOF) throw FormatError("truncated PPM header");
  return tok;
}

int parse_uint(const std::string& tok) {
  if (tok.empty() || tok.size() > 9) throw FormatError("bad PPM header integer");
  long v = 0;
  for (char c : tok) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw FormatError("bad PPM header integer '" + tok + "'");
    v = v * 10 + (c - '0');
  }
  return static_cast<int>(v);
}

}  // namespace

Image load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  if (next_token(in) != "P6") throw FormatError(path + ": not a binary PPM (P6)");
  const int width = parse_uint(next_token(in));
  const int height = parse_uint(next_token(in));
  const int maxval = parse_uint(next_token(in));
  if (maxval != 255) throw FormatError(path + ": only maxval 255 is supported");
  if (height < 8 || width < 8)
    throw DimensionError(path + ": raster must be at least 8x8");

  std::vector<std::uint8_t> raw(static_cast<size_t>(3) * height * width);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(in.gcount()) != raw.size())
    throw FormatError(path + ": truncated raster");

  Image img(height, width);
  size_t k = 0;
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c)
      for (int ch = 0; ch < 3; ++ch) img(ch, r, c) = raw[k++] / 255.0;
  return img;
}

void save_ppm(const std::string& path, const Image& img) {
  if (img.rows <= 0 || img.cols <= 0) throw DimensionError("empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");

  out << "P6\n" << img.cols << " " << img.rows << "\n255\n";
  std::vector<std::uint8_t> raw(static_cast<size_t>(3) * img.rows * img.cols);
  size_t k = 0;
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        const Scalar v = std::fmin(1.0, std::fmax(0.0, img(ch, r, c)));
        raw[k++] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace forbes
