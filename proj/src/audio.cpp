// SPDX-License-Identifier: Apache-2.0
#include "aquanode/audio.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "aquanode/errors.hpp"

namespace aquanode::dsp {

namespace {

std::uint32_t rd_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

std::uint16_t rd_u16(const std::uint8_t* p) {
  return std::uint16_t(p[0] | p[1] << 8);
}

void wr_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
  b.push_back((v >> 16) & 0xff);
  b.push_back((v >> 24) & 0xff);
}

void wr_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back((v >> 8) & 0xff);
}

}  // namespace

AudioClip read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("wav: cannot open '" + path + "'");
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());

  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw FormatError("wav: '" + path + "' is not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t audio_format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_off = 0, data_len = 0;

  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const char* id = reinterpret_cast<const char*>(buf.data() + pos);
    const std::uint32_t len = rd_u32(buf.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > buf.size()) throw FormatError("wav: chunk overruns file");
    if (std::memcmp(id, "fmt ", 4) == 0) {
      if (len < 16) throw FormatError("wav: fmt chunk too short");
      audio_format = rd_u16(buf.data() + body);
      channels = rd_u16(buf.data() + body + 2);
      rate = rd_u32(buf.data() + body + 4);
      bits = rd_u16(buf.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_off = body;
      data_len = len;
    }
    pos = body + len + (len & 1);  // chunks are word-aligned
  }

  if (!have_fmt) throw FormatError("wav: missing fmt chunk");
  if (data_off == 0 && data_len == 0) throw FormatError("wav: missing data chunk");
  if (audio_format == 3)
    throw FormatError("wav: float samples not supported, need 16-bit PCM");
  if (audio_format != 1)
    throw FormatError("wav: compressed format " + std::to_string(audio_format) +
                      " not supported, need 16-bit PCM");
  if (channels != 1)
    throw FormatError("wav: " + std::to_string(channels) + " channels, need mono");
  if (bits != 16)
    throw FormatError("wav: " + std::to_string(bits) + "-bit samples, need 16-bit");
  if (rate == 0) throw FormatError("wav: zero sample rate");
  if (data_len % 2 != 0) throw FormatError("wav: odd data chunk length");

  AudioClip clip;
  clip.sample_rate_hz = static_cast<double>(rate);
  clip.samples.resize(data_len / 2);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const std::int16_t s =
        static_cast<std::int16_t>(rd_u16(buf.data() + data_off + 2 * i));
    // same scale the writer uses, so round-trips stay within half a code
    double v = static_cast<double>(s) / 32767.0;
    if (v < -1.0) v = -1.0;
    clip.samples[i] = v;
  }
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip) {
  if (clip.empty()) throw InvalidInput("write_wav: empty clip");
  if (!(clip.sample_rate_hz > 0.0)) throw InvalidInput("write_wav: invalid sample rate");

  const std::uint32_t nsamp = static_cast<std::uint32_t>(clip.size());
  const std::uint32_t data_len = nsamp * 2;
  const std::uint32_t rate = static_cast<std::uint32_t>(std::llround(clip.sample_rate_hz));

  std::vector<std::uint8_t> b;
  b.reserve(44 + data_len);
  b.insert(b.end(), {'R', 'I', 'F', 'F'});
  wr_u32(b, 36 + data_len);
  b.insert(b.end(), {'W', 'A', 'V', 'E'});
  b.insert(b.end(), {'f', 'm', 't', ' '});
  wr_u32(b, 16);
  wr_u16(b, 1);  // PCM
  wr_u16(b, 1);  // mono
  wr_u32(b, rate);
  wr_u32(b, rate * 2);  // byte rate
  wr_u16(b, 2);         // block align
  wr_u16(b, 16);        // bits per sample
  b.insert(b.end(), {'d', 'a', 't', 'a'});
  wr_u32(b, data_len);
  for (double x : clip.samples) {
    double v = x;
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    wr_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::llround(v * 32767.0))));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError("wav: cannot write '" + path + "'");
  f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!f) throw FormatError("wav: short write to '" + path + "'");
}

}  // namespace aquanode::dsp
