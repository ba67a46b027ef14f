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

#ifndef PHONOPROBE_DSP_HPP
#define PHONOPROBE_DSP_HPP

#include <string>

#include "phonoprobe/linalg.hpp"

namespace phonoprobe::dsp {

struct Waveform {
  Vec samples;       // amplitudes, roughly in [-1, 1]
  int sample_rate = 16000;  // Hz

  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct MfccConfig {
  double window_len = 0.025;  // seconds
  double hop = 0.010;         // seconds
  int n_fft = 512;            // power of two, >= window samples
  int n_mels = 40;
  int n_ceps = 13;            // retained cepstral coefficients, incl. the 0th
  double preemphasis = 0.97;
  double log_floor = 1e-10;

  void validate(int sample_rate) const;
};

struct FeatureMatrix {
  Matrix data;          // T x D
  double frame_hop = 0.0;    // seconds
  double frame_width = 0.0;  // seconds
  std::string origin;

  int frames() const { return data.rows; }
  int dim() const { return data.cols; }
};

// HTK mel scale.
inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Closed-form frame count for N samples, window w, hop h (all in samples).
inline int frame_count(std::size_t n_samples, int window, int hop) {
  if (n_samples < static_cast<std::size_t>(window)) return 0;
  return static_cast<int>((n_samples - window) / hop) + 1;
}

// Slices the signal into overlapping windows; frame f starts at sample f*hop.
// Throws "too short" if the signal does not cover one window.
Matrix frame_signal(const Waveform& wave, double window_len, double hop);

// Triangular mel filterbank, peak 1.0, centers equally spaced on the mel
// scale between fmin and fmax. Rows are filters, columns the n_fft/2+1
// one-sided spectrum bins.
Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax);

// Center frequencies (Hz) of the n_mels filters plus the two outer edges;
// entry 0 is the fmin edge and entry n_mels+1 the fmax edge.
Vec mel_edges(int n_mels, double fmin, double fmax);

// In-place iterative radix-2 FFT over interleaved (re, im) pairs; n must be a
// power of two. The serial reference path checks this against a naive DFT.
void fft_radix2(Vec& re, Vec& im);

// One-sided power spectrum of a single real frame, zero-padded to n_fft.
Vec power_spectrum(const double* frame, int frame_len, int n_fft);

// T x n_mels filterbank energies (before the log), exposed so tests can
// locate the peak filter of a known tone.
Matrix mel_energies(const Waveform& wave, const MfccConfig& cfg);

// Full pipeline: preemphasis, Hamming window, power spectrum, mel energies,
// floored log, orthonormal DCT-II, keep the first n_ceps coefficients.
FeatureMatrix mfcc(const Waveform& wave, const MfccConfig& cfg);

}  // namespace phonoprobe::dsp

#endif  // PHONOPROBE_DSP_HPP
