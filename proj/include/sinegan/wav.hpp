#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sinegan/common.hpp"
#include "sinegan/signal.hpp"

namespace sinegan {

// 16-bit signed PCM, mono, little-endian RIFF/WAVE. fmt and data chunks are
// required; any other chunk is skipped on read.

namespace wavdet {

inline void put_u32(std::string& s, uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
               static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  s.append(b, 4);
}
inline void put_u16(std::string& s, uint16_t v) {
  char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
  s.append(b, 2);
}
inline uint32_t get_u32(const char* p) {
  return static_cast<uint8_t>(p[0]) | (static_cast<uint8_t>(p[1]) << 8) |
         (static_cast<uint8_t>(p[2]) << 16) |
         (static_cast<uint32_t>(static_cast<uint8_t>(p[3])) << 24);
}
inline uint16_t get_u16(const char* p) {
  return static_cast<uint16_t>(static_cast<uint8_t>(p[0]) |
                               (static_cast<uint8_t>(p[1]) << 8));
}

}  // namespace wavdet

inline void wav_write(const Waveform& w, const std::string& path) {
  for (double v : w.samples)
    SINEGAN_CHECK(v >= -1.0 && v <= 1.0, "samples must be in [-1, 1]");

  const uint32_t n = static_cast<uint32_t>(w.samples.size());
  const uint32_t data_bytes = n * 2;
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  wavdet::put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  wavdet::put_u32(out, 16);
  wavdet::put_u16(out, 1);  // PCM
  wavdet::put_u16(out, 1);  // mono
  wavdet::put_u32(out, static_cast<uint32_t>(w.sample_rate_hz));
  wavdet::put_u32(out, static_cast<uint32_t>(w.sample_rate_hz) * 2);
  wavdet::put_u16(out, 2);   // block align
  wavdet::put_u16(out, 16);  // bits per sample
  out += "data";
  wavdet::put_u32(out, data_bytes);
  for (double v : w.samples) {
    const long q = std::lround(v * 32767.0);
    const int16_t s = static_cast<int16_t>(std::min(32767l, std::max(-32768l, q)));
    wavdet::put_u16(out, static_cast<uint16_t>(s));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for write: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path);
}

inline Waveform wav_read(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for read: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 12 || buf.compare(0, 4, "RIFF") != 0 ||
      buf.compare(8, 4, "WAVE") != 0)
    throw FormatError("not a RIFF/WAVE file: " + path);

  bool have_fmt = false;
  uint16_t channels = 0, bits = 0, codec = 0;
  uint32_t rate = 0;
  size_t pos = 12;
  Waveform w;
  bool have_data = false;
  while (pos + 8 <= buf.size()) {
    const std::string id = buf.substr(pos, 4);
    const uint32_t sz = wavdet::get_u32(buf.data() + pos + 4);
    pos += 8;
    if (pos + sz > buf.size()) throw FormatError("truncated chunk: " + path);
    if (id == "fmt ") {
      if (sz < 16) throw FormatError("short fmt chunk: " + path);
      codec = wavdet::get_u16(buf.data() + pos);
      channels = wavdet::get_u16(buf.data() + pos + 2);
      rate = wavdet::get_u32(buf.data() + pos + 4);
      bits = wavdet::get_u16(buf.data() + pos + 14);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("data chunk before fmt: " + path);
      if (codec != 1) throw FormatError("unsupported encoding (want PCM): " + path);
      if (channels != 1) throw FormatError("only mono supported: " + path);
      if (bits != 16) throw FormatError("only 16-bit supported: " + path);
      const size_t n = sz / 2;
      w.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const int16_t s =
            static_cast<int16_t>(wavdet::get_u16(buf.data() + pos + 2 * i));
        w.samples[i] = static_cast<double>(s) / 32767.0;
      }
      w.sample_rate_hz = static_cast<int>(rate);
      have_data = true;
    }
    pos += sz + (sz & 1);  // chunks are word-aligned
  }
  if (!have_data) throw FormatError("missing data chunk: " + path);
  return w;
}

}  // namespace sinegan
