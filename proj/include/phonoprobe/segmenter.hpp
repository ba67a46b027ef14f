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

#ifndef PHONOPROBE_SEGMENTER_HPP
#define PHONOPROBE_SEGMENTER_HPP

#include <map>
#include <string>
#include <vector>

#include "phonoprobe/corpus.hpp"
#include "phonoprobe/linalg.hpp"

namespace phonoprobe::seg {

struct StepRange {
  int first = 0;
  int last = 0;  // inclusive

  int count() const { return last - first + 1; }
};

// Frames whose center f*hop + width/2 lies in [t_start, t_end); if none does,
// the single frame with the nearest center. Total and deterministic.
StepRange interval_to_frames(double t_start, double t_end, double frame_hop, double frame_width,
                             int total_frames);

// Convolution/recurrent timesteps whose receptive-field center frame
// z*j + (s-1)/2 falls inside the frame range; nearest-center fallback,
// clamped to [0, total_steps).
StepRange interval_to_steps(const StepRange& frames, int conv_length, int conv_stride,
                            int total_steps);

// Arithmetic mean of the rows in the (inclusive) range.
Vec segment_vector(const Matrix& rep, const StepRange& range);

struct OccurrenceVector {
  std::string utterance_id;
  std::string symbol;
  corpus::PhonemeClass klass;
  Vec vector;
};

struct TypeVector {
  std::string symbol;
  corpus::PhonemeClass klass;
  Vec vector;
  int occurrences = 0;
};

// Unweighted mean of the occurrence vectors per symbol; errors if a requested
// symbol has no occurrences.
std::vector<TypeVector> phoneme_type_vectors(const std::vector<OccurrenceVector>& occurrences,
                                             const std::vector<std::string>& symbols);

}  // namespace phonoprobe::seg

#endif  // PHONOPROBE_SEGMENTER_HPP
