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

#include "phonoprobe/segmenter.hpp"

#include <cmath>
#include <stdexcept>

namespace phonoprobe::seg {

StepRange interval_to_frames(double t_start, double t_end, double frame_hop, double frame_width,
                             int total_frames) {
  if (total_frames < 1) throw std::invalid_argument("interval_to_frames: no frames");
  if (!(0.0 <= t_start && t_start < t_end)) {
    throw std::invalid_argument("interval_to_frames: need 0 <= t_start < t_end");
  }
  auto center = [&](int f) { return f * frame_hop + frame_width / 2.0; };

  int first = -1, last = -1;
  for (int f = 0; f < total_frames; ++f) {
    const double c = center(f);
    if (c >= t_start && c < t_end) {
      if (first < 0) first = f;
      last = f;
    } else if (first >= 0) {
      break;  // centers are increasing; the in-range block is contiguous
    }
  }
  if (first >= 0) return {first, last};

  // fallback: nearest center to the interval midpoint
  const double mid = 0.5 * (t_start + t_end);
  int best = 0;
  double best_dist = std::abs(center(0) - mid);
  for (int f = 1; f < total_frames; ++f) {
    const double d = std::abs(center(f) - mid);
    if (d < best_dist) {
      best = f;
      best_dist = d;
    }
  }
  return {best, best};
}

StepRange interval_to_steps(const StepRange& frames, int conv_length, int conv_stride,
                            int total_steps) {
  if (total_steps < 1) throw std::invalid_argument("interval_to_steps: no steps");
  auto center = [&](int j) { return conv_stride * j + (conv_length - 1) / 2.0; };

  int first = -1, last = -1;
  for (int j = 0; j < total_steps; ++j) {
    const double c = center(j);
    if (c >= frames.first && c <= frames.last) {
      if (first < 0) first = j;
      last = j;
    } else if (first >= 0) {
      break;
    }
  }
  if (first >= 0) return {first, last};

  const double mid = 0.5 * (frames.first + frames.last);
  int best = 0;
  double best_dist = std::abs(center(0) - mid);
  for (int j = 1; j < total_steps; ++j) {
    const double d = std::abs(center(j) - mid);
    if (d < best_dist) {
      best = j;
      best_dist = d;
    }
  }
  return {best, best};
}

Vec segment_vector(const Matrix& rep, const StepRange& range) {
  if (range.first < 0 || range.last >= rep.rows || range.first > range.last) {
    throw std::invalid_argument("segment_vector: range outside the matrix");
  }
  Vec mean(rep.cols, 0.0);
  for (int t = range.first; t <= range.last; ++t) {
    for (int j = 0; j < rep.cols; ++j) mean[j] += rep(t, j);
  }
  const double n = static_cast<double>(range.count());
  for (double& v : mean) v /= n;
  return mean;
}

std::vector<TypeVector> phoneme_type_vectors(const std::vector<OccurrenceVector>& occurrences,
                                             const std::vector<std::string>& symbols) {
  std::vector<TypeVector> types;
  for (const std::string& sym : symbols) {
    TypeVector tv;
    tv.symbol = sym;
    for (const OccurrenceVector& occ : occurrences) {
      if (occ.symbol != sym) continue;
      if (tv.occurrences == 0) {
        tv.vector.assign(occ.vector.size(), 0.0);
        tv.klass = occ.klass;
      }
      for (std::size_t i = 0; i < occ.vector.size(); ++i) tv.vector[i] += occ.vector[i];
      ++tv.occurrences;
    }
    if (tv.occurrences == 0) {
      throw std::invalid_argument("phoneme_type_vectors: no occurrences of symbol '" + sym + "'");
    }
    for (double& v : tv.vector) v /= static_cast<double>(tv.occurrences);
    types.push_back(std::move(tv));
  }
  return types;
}

}  // namespace phonoprobe::seg
