// Reference external extractor: average-pools each channel to 8x8 and
// returns the 192 cell means as the feature vector. The pull-back spreads
// each upstream entry uniformly over its cell. Speaks the stdio protocol
// documented in external_extractor.cpp; accumulates in double, emits f32.

#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "forbes/image.hpp"

namespace {

bool read_exact_fd(void* data, size_t len) {
  auto* p = static_cast<unsigned char*>(data);
  while (len > 0) {
    const ssize_t n = read(0, p, len);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return false;
    }
    p += n;
    len -= static_cast<size_t>(n);
  }
  return true;
}

bool write_exact_fd(const void* data, size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  while (len > 0) {
    const ssize_t n = write(1, p, len);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      return false;
    }
    p += n;
    len -= static_cast<size_t>(n);
  }
  return true;
}

bool read_u32le(std::uint32_t& v) {
  unsigned char b[4];
  if (!read_exact_fd(b, 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

bool read_image(int rows, int cols, forbes::Image& img) {
  std::vector<unsigned char> raw(static_cast<size_t>(3) * rows * cols * 4);
  if (!read_exact_fd(raw.data(), raw.size())) return false;
  img = forbes::Image(rows, cols);
  size_t k = 0;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < rows; ++r)
      for (int col = 0; col < cols; ++col, k += 4) {
        std::uint32_t bits = static_cast<std::uint32_t>(raw[k]) |
                             (static_cast<std::uint32_t>(raw[k + 1]) << 8) |
                             (static_cast<std::uint32_t>(raw[k + 2]) << 16) |
                             (static_cast<std::uint32_t>(raw[k + 3]) << 24);
        float v;
        std::memcpy(&v, &bits, 4);
        img(c, r, col) = v;
      }
  return true;
}

bool write_f32s(const std::vector<float>& vals) {
  std::vector<unsigned char> raw(vals.size() * 4);
  for (size_t i = 0; i < vals.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &vals[i], 4);
    raw[i * 4] = static_cast<unsigned char>(bits & 0xFF);
    raw[i * 4 + 1] = static_cast<unsigned char>((bits >> 8) & 0xFF);
    raw[i * 4 + 2] = static_cast<unsigned char>((bits >> 16) & 0xFF);
    raw[i * 4 + 3] = static_cast<unsigned char>((bits >> 24) & 0xFF);
  }
  return write_exact_fd(raw.data(), raw.size());
}

constexpr int kDim = 192;

}  // namespace

int main() {
  // Handshake.
  std::string line;
  char ch;
  while (line.size() < 64) {
    if (!read_exact_fd(&ch, 1)) return 1;
    if (ch == '\n') break;
    line.push_back(ch);
  }
  if (line != "FORBES-EXT 1") return 1;
  const std::string ok = "OK 192\n";
  if (!write_exact_fd(ok.data(), ok.size())) return 1;

  for (;;) {
    unsigned char op;
    if (!read_exact_fd(&op, 1)) return 0;  // EOF between requests
    if (op != 0x01 && op != 0x02) {
      const unsigned char nak = 0xFF;
      write_exact_fd(&nak, 1);
      return 1;
    }

    std::uint32_t rows, cols;
    if (!read_u32le(rows) || !read_u32le(cols)) return 1;
    if (rows < 8 || cols < 8 || rows > 1u << 20 || cols > 1u << 20) return 1;
    forbes::Image img;
    if (!read_image(static_cast<int>(rows), static_cast<int>(cols), img)) return 1;
    const forbes::BlockGrid grid =
        forbes::make_grid(img.rows, img.cols, 8, 8);

    if (op == 0x01) {
      std::vector<float> feats(kDim);
      for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j)
            feats[static_cast<size_t>((c * 8 + i) * 8 + j)] =
                static_cast<float>(forbes::block_mean(img, grid, i, j, c));
      if (!write_f32s(feats)) return 1;
    } else {
      std::vector<unsigned char> raw(static_cast<size_t>(kDim) * 4);
      if (!read_exact_fd(raw.data(), raw.size())) return 1;
      std::vector<double> up(kDim);
      for (int i = 0; i < kDim; ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(raw[i * 4]) |
                             (static_cast<std::uint32_t>(raw[i * 4 + 1]) << 8) |
                             (static_cast<std::uint32_t>(raw[i * 4 + 2]) << 16) |
                             (static_cast<std::uint32_t>(raw[i * 4 + 3]) << 24);
        float v;
        std::memcpy(&v, &bits, 4);
        up[static_cast<size_t>(i)] = v;
      }
      std::vector<float> grad(static_cast<size_t>(3) * img.rows * img.cols);
      size_t k = 0;
      for (int c = 0; c < 3; ++c)
        for (int r = 0; r < img.rows; ++r)
          for (int col = 0; col < img.cols; ++col, ++k) {
            int bi = 0, bj = 0;
            while (bi + 1 < 8 && r >= grid.row_offset[bi + 1]) ++bi;
            while (bj + 1 < 8 && col >= grid.col_offset[bj + 1]) ++bj;
            const double count = static_cast<double>(grid.row_extent[bi]) *
                                 static_cast<double>(grid.col_extent[bj]);
            grad[k] = static_cast<float>(up[static_cast<size_t>((c * 8 + bi) * 8 + bj)] /
                                         count);
          }
      if (!write_f32s(grad)) return 1;
    }
  }
}
