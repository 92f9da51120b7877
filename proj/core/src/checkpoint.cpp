#include "cemb/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <string>

#include "cemb/errors.hpp"

namespace cemb {
namespace {

constexpr char kMagic[4] = {'C', 'E', 'M', 'B'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double d) {
    const auto v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_++]} << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{in_[pos_++]} << (8 * i);
    return std::bit_cast<double>(v);
  }
  bool at_end() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const DenseNetwork& net) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(net.layer_count()));
  for (const auto& layer : net.layers()) {
    w.u8(static_cast<std::uint8_t>(layer.activation));
    w.u32(static_cast<std::uint32_t>(layer.affine.weights.rows()));
    w.u32(static_cast<std::uint32_t>(layer.affine.weights.cols()));
    for (double v : layer.affine.weights.data()) w.f64(v);
    for (double v : layer.affine.bias) w.f64(v);
  }
  w.u32(static_cast<std::uint32_t>(net.bottleneck_index()));
  return w.take();
}

DenseNetwork decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(sizeof kMagic);
  for (char m : kMagic) {
    if (r.u8() != static_cast<std::uint8_t>(m)) throw FormatError("not a CEMB checkpoint");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  std::vector<Layer> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t tag = r.u8();
    if (tag > static_cast<std::uint8_t>(Activation::relu)) {
      throw FormatError("unknown activation tag " + std::to_string(tag));
    }
    const std::size_t rows = r.u32();
    const std::size_t cols = r.u32();
    // Guard against absurd sizes before allocating.
    if ((rows * cols + rows) > r.remaining() / 8) {
      throw FormatError("checkpoint truncated in layer " + std::to_string(i));
    }
    RealMatrix weights(rows, cols);
    for (double& v : weights.data()) v = r.f64();
    Vector bias(rows);
    for (double& v : bias) v = r.f64();
    layers.push_back(Layer{AffineLayer{std::move(weights), std::move(bias)},
                           static_cast<Activation>(tag)});
  }
  const std::uint32_t bottleneck = r.u32();
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint");
  try {
    return DenseNetwork(std::move(layers), bottleneck);
  } catch (const Error& e) {
    throw FormatError(std::string("invalid network in checkpoint: ") + e.what());
  }
}

void save_checkpoint(const DenseNetwork& net, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path.string());
}

DenseNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace cemb
