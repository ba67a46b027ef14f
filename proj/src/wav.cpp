// Copyright 2026 The phonoprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "phonoprobe/wav.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace phonoprobe::wav {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint16_t get_u16(const std::string& s, std::size_t off) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(s[off]) |
                                    (static_cast<unsigned char>(s[off + 1]) << 8));
}

std::uint32_t get_u32(const std::string& s, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[off + i]);
  return v;
}

}  // namespace

std::vector<std::int16_t> quantize(const Vec& samples) {
  std::vector<std::int16_t> pcm(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double v = samples[i];
    if (v > 1.0) v = 1.0;
    if (v < -1.0) v = -1.0;
    pcm[i] = static_cast<std::int16_t>(std::llround(v * 32767.0));
  }
  return pcm;
}

Vec dequantize(const std::vector<std::int16_t>& pcm) {
  Vec samples(pcm.size());
  for (std::size_t i = 0; i < pcm.size(); ++i) samples[i] = pcm[i] / 32767.0;
  return samples;
}

std::string encode_wav(const dsp::Waveform& wave) {
  const std::vector<std::int16_t> pcm = quantize(wave.samples);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);

  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  put_u16(out, 2);   // block align
  put_u16(out, 16);  // bits per sample
  out += "data";
  put_u32(out, data_bytes);
  for (std::int16_t s : pcm) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

void write_wav(const std::string& path, const dsp::Waveform& wave) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_wav: cannot open " + path);
  const std::string bytes = encode_wav(wave);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write_wav: write failed for " + path);
}

dsp::Waveform read_wav(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_wav: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (bytes.size() < 44 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw std::runtime_error("read_wav: " + path + " is not a RIFF/WAVE file");
  }

  // walk chunks; require fmt before data
  std::size_t off = 12;
  bool have_fmt = false;
  int sample_rate = 0;
  while (off + 8 <= bytes.size()) {
    const std::string id = bytes.substr(off, 4);
    const std::uint32_t len = get_u32(bytes, off + 4);
    const std::size_t body = off + 8;
    if (body + len > bytes.size()) throw std::runtime_error("read_wav: truncated chunk in " + path);
    if (id == "fmt ") {
      if (len < 16) throw std::runtime_error("read_wav: malformed fmt chunk in " + path);
      const std::uint16_t format = get_u16(bytes, body);
      const std::uint16_t channels = get_u16(bytes, body + 2);
      const std::uint16_t bits = get_u16(bytes, body + 14);
      if (format != 1) throw std::runtime_error("read_wav: " + path + ": only PCM (format 1) is supported, got format " + std::to_string(format));
      if (channels != 1) throw std::runtime_error("read_wav: " + path + ": only mono is supported, got " + std::to_string(channels) + " channels");
      if (bits != 16) throw std::runtime_error("read_wav: " + path + ": only 16-bit samples are supported, got " + std::to_string(bits));
      sample_rate = static_cast<int>(get_u32(bytes, body + 4));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw std::runtime_error("read_wav: data chunk before fmt in " + path);
      std::vector<std::int16_t> pcm(len / 2);
      for (std::size_t i = 0; i < pcm.size(); ++i) {
        pcm[i] = static_cast<std::int16_t>(get_u16(bytes, body + 2 * i));
      }
      dsp::Waveform wave;
      wave.sample_rate = sample_rate;
      wave.samples = dequantize(pcm);
      return wave;
    }
    off = body + len + (len & 1);  // chunks are word-aligned
  }
  throw std::runtime_error("read_wav: no data chunk in " + path);
}

}  // namespace phonoprobe::wav
