#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sinegan/common.hpp"
#include "sinegan/nn.hpp"

namespace sinegan {

// Binary checkpoint layout (all little-endian):
//   magic "SGAN" | u16 version=1 | u32 layer_count
//   per layer:
//     u8 kind | u32 hyper_count | u32 hyper[]
//     u32 meta_count | f64 meta[]            (free-form slot; layer 0 carries
//                                             network-level metadata)
//     u32 param_count | per tensor: u32 ndims | u32 dims[] | f32 values[]
//     u32 state_count | same tensor encoding
//   u32 crc32 of everything before it
// Values are stored at 32-bit precision.

namespace ckptdet {

inline uint32_t crc32(const uint8_t* data, size_t len) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = 0xFFFFFFFFu;
  for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

struct Writer {
  std::string buf;
  void u8(uint8_t v) { buf.push_back(static_cast<char>(v)); }
  void u16(uint16_t v) {
    for (int i = 0; i < 2; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>(v >> (8 * i)));
  }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>(bits >> (8 * i)));
  }
};

struct Reader {
  const uint8_t* p;
  size_t len;
  size_t pos = 0;
  void need(size_t n) const {
    if (pos + n > len) throw FormatError("truncated checkpoint");
  }
  uint8_t u8() {
    need(1);
    return p[pos++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(p[pos] | (p[pos + 1] << 8));
    pos += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    need(8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(p[pos + i]) << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

inline void write_tensor(Writer& w, const Tensor& t) {
  w.u32(static_cast<uint32_t>(t.shape.size()));
  for (int64_t d : t.shape) w.u32(static_cast<uint32_t>(d));
  for (double v : t.values) w.f32(static_cast<float>(v));
}

inline void read_tensor_into(Reader& r, Tensor& t) {
  const uint32_t ndims = r.u32();
  std::vector<int64_t> shape(ndims);
  for (uint32_t i = 0; i < ndims; ++i) shape[i] = r.u32();
  if (shape != t.shape) throw FormatError("checkpoint shape table mismatch");
  for (double& v : t.values) v = static_cast<double>(r.f32());
}

}  // namespace ckptdet

constexpr uint16_t kCheckpointVersion = 1;

inline void save_checkpoint(Network& net, const std::string& path,
                            const std::vector<double>& layer0_meta = {}) {
  ckptdet::Writer w;
  w.buf += "SGAN";
  w.u16(kCheckpointVersion);
  w.u32(static_cast<uint32_t>(net.num_layers()));
  for (size_t li = 0; li < net.num_layers(); ++li) {
    Layer& l = net.layer(li);
    w.u8(static_cast<uint8_t>(l.kind()));
    const auto hyper = l.hyper();
    w.u32(static_cast<uint32_t>(hyper.size()));
    for (uint32_t h : hyper) w.u32(h);
    const auto& meta = li == 0 ? layer0_meta : std::vector<double>{};
    w.u32(static_cast<uint32_t>(meta.size()));
    for (double m : meta) w.f64(m);
    const auto params = l.params();
    w.u32(static_cast<uint32_t>(params.size()));
    for (Tensor* t : params) ckptdet::write_tensor(w, *t);
    const auto state = l.state();
    w.u32(static_cast<uint32_t>(state.size()));
    for (Tensor* t : state) ckptdet::write_tensor(w, *t);
  }
  w.u32(ckptdet::crc32(reinterpret_cast<const uint8_t*>(w.buf.data()), w.buf.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for write: " + path);
  f.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
  if (!f) throw IoError("write failed: " + path);
}

inline Network load_checkpoint(const std::string& path,
                               std::vector<double>* layer0_meta = nullptr) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for read: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 14) throw FormatError("checkpoint too short");

  const uint32_t stored_crc = ckptdet::crc32(
      reinterpret_cast<const uint8_t*>(buf.data()), buf.size() - 4);
  ckptdet::Reader tail{reinterpret_cast<const uint8_t*>(buf.data()),
                       buf.size(), buf.size() - 4};
  if (tail.u32() != stored_crc) throw FormatError("checkpoint crc mismatch");

  ckptdet::Reader r{reinterpret_cast<const uint8_t*>(buf.data()), buf.size() - 4};
  char magic[4];
  r.need(4);
  std::memcpy(magic, r.p, 4);
  r.pos += 4;
  if (std::memcmp(magic, "SGAN", 4) != 0)
    throw FormatError("bad checkpoint magic");
  const uint16_t version = r.u16();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));

  Network net;
  const uint32_t layer_count = r.u32();
  for (uint32_t li = 0; li < layer_count; ++li) {
    const auto kind = static_cast<LayerKind>(r.u8());
    const uint32_t hyper_count = r.u32();
    if (hyper_count > 16) throw FormatError("implausible hyper count");
    std::vector<uint32_t> hyper(hyper_count);
    for (auto& h : hyper) h = r.u32();
    auto layer = make_layer(kind, hyper);

    const uint32_t meta_count = r.u32();
    if (meta_count > 64) throw FormatError("implausible meta count");
    std::vector<double> meta(meta_count);
    for (auto& m : meta) m = r.f64();
    if (li == 0 && layer0_meta) *layer0_meta = meta;

    const uint32_t param_count = r.u32();
    auto params = layer->params();
    if (param_count != params.size())
      throw FormatError("checkpoint parameter table mismatch");
    for (Tensor* t : params) ckptdet::read_tensor_into(r, *t);
    const uint32_t state_count = r.u32();
    auto state = layer->state();
    if (state_count != state.size())
      throw FormatError("checkpoint state table mismatch");
    for (Tensor* t : state) ckptdet::read_tensor_into(r, *t);

    net.add_layer(std::move(layer));
  }
  if (r.pos != r.len) throw FormatError("trailing bytes in checkpoint");
  return net;
}

}  // namespace sinegan
