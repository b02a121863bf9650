#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "jazzdyn/error.hpp"

namespace jazzdyn::acoustics {

struct Waveform {
  double sample_rate = 16000.0;
  std::vector<double> samples;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class WavEncoding { Pcm16, Float32 };

namespace wav_detail {

inline void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>(v >> 8));
}
inline std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t get_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace wav_detail

inline std::string encode_wav(const Waveform& w, WavEncoding enc = WavEncoding::Float32) {
  using namespace wav_detail;
  const std::uint16_t bits = enc == WavEncoding::Pcm16 ? 16 : 32;
  const std::uint16_t fmt = enc == WavEncoding::Pcm16 ? 1 : 3;
  const auto rate = static_cast<std::uint32_t>(std::lround(w.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(w.samples.size() * (bits / 8));
  std::string s = "RIFF";
  put_u32(s, 36 + data_bytes);
  s += "WAVEfmt ";
  put_u32(s, 16);
  put_u16(s, fmt);
  put_u16(s, 1);
  put_u32(s, rate);
  put_u32(s, rate * (bits / 8));
  put_u16(s, bits / 8);
  put_u16(s, bits);
  s += "data";
  put_u32(s, data_bytes);
  for (double v : w.samples) {
    if (enc == WavEncoding::Pcm16) {
      const double c = std::clamp(v, -1.0, 1.0);
      put_u16(s, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
    } else {
      const float f = static_cast<float>(v);
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      put_u32(s, u);
    }
  }
  return s;
}

// Mono PCM16 or float32 only; other layouts raise BadWav.
inline Waveform decode_wav(const std::string& bytes) {
  using namespace wav_detail;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0)
    throw Error(Errc::BadWav, "not a RIFF/WAVE file");
  std::size_t pos = 12;
  int fmt = -1, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t len = get_u32(p + pos + 4);
    pos += 8;
    if (len > bytes.size() - pos) throw Error(Errc::BadWav, "chunk '" + id + "' runs past end of file");
    if (id == "fmt ") {
      if (len < 16) throw Error(Errc::BadWav, "short fmt chunk");
      fmt = get_u16(p + pos);
      channels = get_u16(p + pos + 2);
      rate = get_u32(p + pos + 4);
      bits = get_u16(p + pos + 14);
      if (fmt == 0xfffe && len >= 26) fmt = get_u16(p + pos + 24);  // WAVE_FORMAT_EXTENSIBLE subformat
    } else if (id == "data") {
      if (fmt < 0) throw Error(Errc::BadWav, "data chunk before fmt chunk");
      if (channels != 1) throw Error(Errc::BadWav, "only mono WAV is supported");
      if (rate == 0) throw Error(Errc::BadWav, "zero sample rate");
      Waveform w;
      w.sample_rate = rate;
      if (fmt == 1 && bits == 16) {
        for (std::size_t i = 0; i + 2 <= len; i += 2)
          w.samples.push_back(static_cast<std::int16_t>(get_u16(p + pos + i)) / 32768.0);
      } else if (fmt == 3 && bits == 32) {
        for (std::size_t i = 0; i + 4 <= len; i += 4) {
          const std::uint32_t u = get_u32(p + pos + i);
          float f;
          std::memcpy(&f, &u, 4);
          if (!std::isfinite(f)) throw Error(Errc::BadWav, "non-finite sample");
          w.samples.push_back(f);
        }
      } else {
        throw Error(Errc::BadWav, "unsupported encoding (format " + std::to_string(fmt) + ", " +
                                      std::to_string(bits) + " bits)");
      }
      return w;
    }
    pos += len + (len & 1);
  }
  throw Error(Errc::BadWav, "no data chunk");
}

inline void write_wav(const std::string& path, const Waveform& w, WavEncoding enc = WavEncoding::Float32) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::Io, "cannot write " + path);
  const auto s = encode_wav(w, enc);
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::Io, "cannot read " + path);
  std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_wav(s);
}

}  // namespace jazzdyn::acoustics
