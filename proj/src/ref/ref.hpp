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
//
// Serial reference implementations. These deliberately recompute everything
// the slow, obvious way and never share code with the main kernels; the test
// suites and the benchmark compare the two paths.

#ifndef PHONOPROBE_REF_HPP
#define PHONOPROBE_REF_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "phonoprobe/encoder.hpp"
#include "phonoprobe/linalg.hpp"

namespace phonoprobe::ref {

// O(n^2) DFT power spectrum (one-sided, n_fft/2+1 bins) of a real frame.
Vec naive_power_spectrum(const double* frame, int frame_len, int n_fft);

// Power concentrated within +/- half_width_hz of each target frequency,
// as a fraction of total power (DC excluded).
double band_power_fraction(const Vec& samples, int sample_rate,
                           const std::vector<double>& targets_hz, double half_width_hz);

// exp(mean log power) / mean power over the positive-frequency bins.
double spectral_flatness(const Vec& samples);

// Scalar-loop coupled-carry RHN, written independently of the vectorized
// layer: plain index arithmetic, no shared helpers.
Matrix rhn_layer_scalar(const Matrix& x_seq, const enc::RhnLayerParams& lp, int microsteps);

// Naive Ward agglomeration: at every step recompute the merge cost of every
// active cluster pair from the raw points. Heights are sqrt(2 * delta ESS),
// matching the Lance-Williams implementation's convention.
struct NaiveMerge {
  int a, b;       // cluster ids, scipy convention (originals 0..P-1, new P+step)
  double height;
  int size;
};
std::vector<NaiveMerge> ward_naive(const Matrix& points);

// Pair-by-pair adjusted Rand index.
double adjusted_rand_index_brute(const std::vector<int>& p1, const std::vector<int>& p2);

// Textbook Pearson correlation.
double pearson_direct(const Vec& x, const Vec& y);

// Central finite differences of eval() with respect to x[0..n).
Vec central_difference(const std::function<double()>& eval, double* x, std::size_t n, double h);

}  // namespace phonoprobe::ref

#endif  // PHONOPROBE_REF_HPP
