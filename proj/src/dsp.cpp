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

#include "phonoprobe/dsp.hpp"

#include <cmath>
#include <stdexcept>

#include "phonoprobe/util.hpp"

namespace phonoprobe::dsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int window_samples(double window_len, int sample_rate) {
  return static_cast<int>(std::llround(window_len * sample_rate));
}

}  // namespace

void MfccConfig::validate(int sample_rate) const {
  if (hop <= 0.0 || window_len < hop) {
    throw std::invalid_argument("mfcc config: need window_len >= hop > 0");
  }
  if (n_mels < 1) throw std::invalid_argument("mfcc config: n_mels < 1");
  if (n_ceps < 1 || n_ceps > n_mels) {
    throw std::invalid_argument("mfcc config: need 1 <= n_ceps <= n_mels");
  }
  if (!is_power_of_two(n_fft)) throw std::invalid_argument("mfcc config: n_fft must be a power of two");
  if (n_fft < window_samples(window_len, sample_rate)) {
    throw std::invalid_argument("mfcc config: n_fft smaller than the analysis window");
  }
  if (preemphasis < 0.0 || preemphasis >= 1.0) {
    throw std::invalid_argument("mfcc config: preemphasis must lie in [0,1)");
  }
  if (log_floor <= 0.0) throw std::invalid_argument("mfcc config: log_floor must be positive");
}

Matrix frame_signal(const Waveform& wave, double window_len, double hop) {
  if (wave.sample_rate <= 0) throw std::invalid_argument("frame_signal: sample_rate must be positive");
  const int w = window_samples(window_len, wave.sample_rate);
  const int h = window_samples(hop, wave.sample_rate);
  if (w <= 0 || h <= 0 || w < h) throw std::invalid_argument("frame_signal: need window >= hop > 0");
  if (wave.samples.size() < static_cast<std::size_t>(w)) {
    throw std::invalid_argument("frame_signal: signal too short for one window");
  }
  const int t = frame_count(wave.samples.size(), w, h);
  Matrix frames(t, w);
  for (int f = 0; f < t; ++f) {
    const double* src = wave.samples.data() + static_cast<std::size_t>(f) * h;
    std::copy(src, src + w, frames.row(f));
  }
  return frames;
}

Vec mel_edges(int n_mels, double fmin, double fmax) {
  const double mlo = hz_to_mel(fmin);
  const double mhi = hz_to_mel(fmax);
  Vec edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * i / (n_mels + 1));
  }
  return edges;
}

Matrix mel_filterbank(int n_mels, int n_fft, int sample_rate, double fmin, double fmax) {
  if (n_mels < 1) throw std::invalid_argument("mel_filterbank: n_mels < 1");
  if (!(0.0 <= fmin && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw std::invalid_argument("mel_filterbank: need 0 <= fmin < fmax <= sample_rate/2");
  }
  if (!is_power_of_two(n_fft)) throw std::invalid_argument("mel_filterbank: n_fft must be a power of two");

  const int bins = n_fft / 2 + 1;
  const Vec edges = mel_edges(n_mels, fmin, fmax);
  Matrix fb(n_mels, bins);
  for (int b = 0; b < bins; ++b) {
    const double f = static_cast<double>(b) * sample_rate / n_fft;
    for (int m = 0; m < n_mels; ++m) {
      const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
      double w = 0.0;
      if (f >= left && f <= center && center > left) {
        w = (f - left) / (center - left);
      } else if (f > center && f <= right && right > center) {
        w = (right - f) / (right - center);
      }
      fb(m, b) = w;
    }
  }
  return fb;
}

void fft_radix2(Vec& re, Vec& im) {
  const std::size_t n = re.size();
  if (n != im.size() || !is_power_of_two(static_cast<int>(n))) {
    throw std::invalid_argument("fft_radix2: length must be a power of two");
  }
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const double wr = std::cos(ang), wi = std::sin(ang);
    for (std::size_t i = 0; i < n; i += len) {
      double cr = 1.0, ci = 0.0;
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::size_t a = i + k, b = i + k + len / 2;
        const double tr = re[b] * cr - im[b] * ci;
        const double ti = re[b] * ci + im[b] * cr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
        const double ncr = cr * wr - ci * wi;
        ci = cr * wi + ci * wr;
        cr = ncr;
      }
    }
  }
}

Vec power_spectrum(const double* frame, int frame_len, int n_fft) {
  Vec re(n_fft, 0.0), im(n_fft, 0.0);
  std::copy(frame, frame + frame_len, re.begin());
  fft_radix2(re, im);
  Vec power(n_fft / 2 + 1);
  for (int b = 0; b <= n_fft / 2; ++b) power[b] = re[b] * re[b] + im[b] * im[b];
  return power;
}

namespace {

// preemphasis + framing + Hamming window, shared by mel_energies and mfcc
Matrix windowed_frames(const Waveform& wave, const MfccConfig& cfg) {
  Waveform pre = wave;
  const double p = cfg.preemphasis;
  if (p > 0.0 && pre.samples.size() > 1) {
    for (std::size_t i = pre.samples.size() - 1; i >= 1; --i) {
      pre.samples[i] -= p * pre.samples[i - 1];
    }
  }
  Matrix frames = frame_signal(pre, cfg.window_len, cfg.hop);
  const int w = frames.cols;
  Vec hamming(w);
  for (int i = 0; i < w; ++i) hamming[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (w - 1));
  for (int f = 0; f < frames.rows; ++f) {
    double* r = frames.row(f);
    for (int i = 0; i < w; ++i) r[i] *= hamming[i];
  }
  return frames;
}

}  // namespace

Matrix mel_energies(const Waveform& wave, const MfccConfig& cfg) {
  cfg.validate(wave.sample_rate);
  Matrix frames = windowed_frames(wave, cfg);
  const Matrix fb = mel_filterbank(cfg.n_mels, cfg.n_fft, wave.sample_rate, 0.0, wave.sample_rate / 2.0);
  Matrix energies(frames.rows, cfg.n_mels);
  util::parallel_for(frames.rows, [&](std::int64_t f) {
    const Vec power = power_spectrum(frames.row(static_cast<int>(f)), frames.cols, cfg.n_fft);
    double* out = energies.row(static_cast<int>(f));
    for (int m = 0; m < cfg.n_mels; ++m) out[m] = la::dot(fb.row(m), power.data(), static_cast<int>(power.size()));
  });
  return energies;
}

FeatureMatrix mfcc(const Waveform& wave, const MfccConfig& cfg) {
  Matrix energies = mel_energies(wave, cfg);
  const int m = cfg.n_mels;

  // orthonormal DCT-II basis, n_ceps x n_mels
  Matrix dct(cfg.n_ceps, m);
  for (int k = 0; k < cfg.n_ceps; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / m);
    for (int j = 0; j < m; ++j) dct(k, j) = scale * std::cos(kPi * k * (2 * j + 1) / (2.0 * m));
  }

  FeatureMatrix out;
  out.data = Matrix(energies.rows, cfg.n_ceps);
  out.frame_hop = cfg.hop;
  out.frame_width = cfg.window_len;
  out.origin = "mfcc";
  util::parallel_for(energies.rows, [&](std::int64_t f) {
    Vec logmel(m);
    const double* e = energies.row(static_cast<int>(f));
    for (int j = 0; j < m; ++j) logmel[j] = std::log(std::max(e[j], cfg.log_floor));
    la::matvec(dct, logmel.data(), out.data.row(static_cast<int>(f)));
  });
  return out;
}

}  // namespace phonoprobe::dsp
