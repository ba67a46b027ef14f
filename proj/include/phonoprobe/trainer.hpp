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

#ifndef PHONOPROBE_TRAINER_HPP
#define PHONOPROBE_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "phonoprobe/corpus.hpp"
#include "phonoprobe/dsp.hpp"
#include "phonoprobe/encoder.hpp"

namespace phonoprobe::train {

struct TrainConfig {
  double margin = 0.2;
  int batch_size = 16;
  int epochs = 30;
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  int checkpoint_every = 0;  // epochs between checkpoints; 0 = final only

  void validate() const;
};

// One tensor of gradient per parameter tensor, same shapes.
using GradientSet = enc::Parameters;

// 1 - a.b / (|a||b|), defined for any nonzero vectors.
double cosine_distance(const Vec& a, const Vec& b);

// Eq.-style margin loss over a minibatch: every other item in the batch is a
// contrast candidate for both the utterance and the scene side.
double contrastive_loss(const std::vector<Vec>& utterances, const std::vector<Vec>& scenes,
                        double margin);

struct Batch {
  std::vector<const Matrix*> features;  // MFCC matrices, one per example
  std::vector<const Vec*> scenes;
};

struct LossGradients {
  double loss = 0.0;
  GradientSet grads;
};

// Loss plus exact reverse-mode gradients for every parameter. Per-example
// backward passes run in parallel; slot sums are reduced in index order, so
// the result is independent of the worker count. Hinge subgradient at the
// kink is zero.
LossGradients loss_gradients(const Batch& batch, const enc::Parameters& params,
                             const enc::EncoderConfig& cfg, double margin);

struct AdamState {
  GradientSet m;
  GradientSet v;
  long step = 0;
};

AdamState init_adam_state(const enc::Parameters& params);

// Standard Adam with bias correction; throws on a non-finite update.
void adam_step(enc::Parameters& params, const GradientSet& grads, AdamState& state,
               const TrainConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double recall_at_1 = 0.0;
  double recall_at_5 = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  enc::Parameters params;
  std::vector<EpochStats> log;
  bool diverged = false;
};

// Fraction of query embeddings whose matched scene is nearest (and among the
// five nearest) by cosine distance over the whole candidate set.
struct Recall {
  double at_1 = 0.0;
  double at_5 = 0.0;
};

Recall retrieval_recall(const std::vector<Vec>& query_embeddings,
                        const std::vector<Vec>& scene_embeddings);

using CheckpointSink = std::function<void(int epoch, const enc::Parameters&, bool final)>;

// Seeded-shuffle epochs of Adam updates with per-epoch validation retrieval.
// On divergence (non-finite loss) training stops and the parameters from the
// end of the previous epoch are returned with diverged = true.
TrainResult train_model(const corpus::Corpus& corpus, const dsp::MfccConfig& mfcc_cfg,
                        const enc::EncoderConfig& enc_cfg, const TrainConfig& train_cfg,
                        const CheckpointSink& sink = nullptr);

// Training log serialization: epoch, mean_loss, recall_at_1, recall_at_5,
// wall_seconds.
std::string log_to_csv(const std::vector<EpochStats>& log);

}  // namespace phonoprobe::train

#endif  // PHONOPROBE_TRAINER_HPP
