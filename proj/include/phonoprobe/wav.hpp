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

#ifndef PHONOPROBE_WAV_HPP
#define PHONOPROBE_WAV_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "phonoprobe/dsp.hpp"

namespace phonoprobe::wav {

// Deterministic float -> PCM16 quantization (clamp, scale by 32767, round
// half away from zero). Corpus checksums are computed over these bytes.
std::vector<std::int16_t> quantize(const Vec& samples);
Vec dequantize(const std::vector<std::int16_t>& pcm);

// RIFF/WAVE, PCM 16-bit little-endian, mono. Everything else is rejected
// with a diagnostic naming the offending field.
void write_wav(const std::string& path, const dsp::Waveform& wave);
dsp::Waveform read_wav(const std::string& path);

// In-memory encode of the same container format, used for checksums.
std::string encode_wav(const dsp::Waveform& wave);

}  // namespace phonoprobe::wav

#endif  // PHONOPROBE_WAV_HPP
