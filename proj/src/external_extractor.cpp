// Wire protocol between the parent and an external extractor child, all on
// the child's stdin/stdout. Integers are u32 little-endian, reals f32
// little-endian, images planar (channel, row, column).
//
//   handshake   parent: "FORBES-EXT 1\n"   child: "OK <d>\n"
//   FORWARD     parent: 0x01, H, W, 3*H*W reals   child: d reals
//   VJP         parent: 0x02, H, W, image, d upstream reals
//               child: 3*H*W gradient reals
//   anything else: child replies byte 0xFF; the parent treats that (or any
//   other framing violation) as ProtocolError.

#include <cstdint>
#include <cstring>
#include <vector>

#include "forbes/child_process.hpp"
#include "forbes/errors.hpp"
#include "forbes/extractor.hpp"

namespace forbes {

namespace {

void put_u32le(std::vector<std::uint8_t>& buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v & 0xFF));
  buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
  buf.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
  buf.push_back(static_cast<std::uint8_t>((v >> 24) & 0xFF));
}

void put_f32le(std::vector<std::uint8_t>& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32le(buf, bits);
}

float get_f32le(const std::uint8_t* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                       (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

void append_image(std::vector<std::uint8_t>& buf, const Image& img) {
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < img.rows; ++r)
      for (int col = 0; col < img.cols; ++col)
        put_f32le(buf, static_cast<float>(img(c, r, col)));
}

class ExternalExtractor final : public Extractor {
 public:
  explicit ExternalExtractor(const std::string& command)
      : name_("external:" + command), child_(split_command(command)) {
    child_.write_exact("FORBES-EXT 1\n", 13);
    const std::string reply = child_.read_line();
    if (reply.rfind("OK ", 0) != 0)
      throw ProtocolError("bad extractor handshake reply '" + reply + "'");
    try {
      dim_ = std::stoi(reply.substr(3));
    } catch (const std::exception&) {
      throw ProtocolError("bad extractor handshake reply '" + reply + "'");
    }
    if (dim_ <= 0) throw ProtocolError("extractor announced a non-positive dimension");
  }

  const std::string& name() const override { return name_; }
  int dim() const override { return dim_; }

  FeatureVector extract(const Image& img) override {
    std::vector<std::uint8_t> msg;
    msg.push_back(0x01);
    put_u32le(msg, static_cast<std::uint32_t>(img.rows));
    put_u32le(msg, static_cast<std::uint32_t>(img.cols));
    append_image(msg, img);
    child_.write_exact(msg.data(), msg.size());

    std::vector<std::uint8_t> reply(static_cast<size_t>(dim_) * 4);
    child_.read_exact(reply.data(), reply.size());
    FeatureVector f(dim_);
    for (int i = 0; i < dim_; ++i) f[i] = get_f32le(&reply[static_cast<size_t>(i) * 4]);
    return f;
  }

  Image extract_vjp(const Image& img, const VecX& upstream) override {
    if (upstream.size() != dim_)
      throw DimensionError("upstream gradient has wrong length");
    std::vector<std::uint8_t> msg;
    msg.push_back(0x02);
    put_u32le(msg, static_cast<std::uint32_t>(img.rows));
    put_u32le(msg, static_cast<std::uint32_t>(img.cols));
    append_image(msg, img);
    for (int i = 0; i < dim_; ++i) put_f32le(msg, static_cast<float>(upstream[i]));
    child_.write_exact(msg.data(), msg.size());

    std::vector<std::uint8_t> reply(static_cast<size_t>(3) * img.rows * img.cols * 4);
    child_.read_exact(reply.data(), reply.size());
    Image grad(img.rows, img.cols);
    size_t k = 0;
    for (int c = 0; c < 3; ++c)
      for (int r = 0; r < img.rows; ++r)
        for (int col = 0; col < img.cols; ++col, k += 4)
          grad(c, r, col) = get_f32le(&reply[k]);
    return grad;
  }

 private:
  std::string name_;
  ChildProcess child_;
  int dim_ = 0;
};

}  // namespace

std::shared_ptr<Extractor> make_external_extractor(const std::string& command) {
  return std::make_shared<ExternalExtractor>(command);
}

}  // namespace forbes
