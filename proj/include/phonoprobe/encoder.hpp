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

#ifndef PHONOPROBE_ENCODER_HPP
#define PHONOPROBE_ENCODER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "phonoprobe/dsp.hpp"
#include "phonoprobe/linalg.hpp"

namespace phonoprobe::enc {

struct EncoderConfig {
  int input_dim = 13;
  int conv_length = 6;  // s
  int conv_size = 32;   // d
  int conv_stride = 3;  // z
  int rhn_layers = 2;   // k
  int rhn_dim = 64;
  int microsteps = 2;  // L
  int attn_hidden = 64;
  int joint_dim = 64;  // must equal rhn_dim: the embedding is the pooled state
  int scene_dim = 64;

  void validate() const;

  // timesteps produced by the convolution for T input frames
  int conv_steps(int input_frames) const {
    return (input_frames - conv_length) / conv_stride + 1;
  }

  // the full-scale configuration the original model was trained with
  static EncoderConfig paper_reference();
};

struct RhnLayerParams {
  Matrix w_h, w_t;             // rhn_dim x in_dim, applied at microstep 1 only
  std::vector<Matrix> r_h, r_t;  // per microstep, rhn_dim x rhn_dim
  std::vector<Vec> b_h, b_t;     // per microstep, rhn_dim
};

struct Parameters {
  Matrix conv_kernel;  // (s * input_dim) x d; row a*input_dim+i, column o
  Vec conv_bias;       // d
  std::vector<RhnLayerParams> layers;
  Matrix attn_u;   // attn_hidden x rhn_dim
  Vec attn_bias;   // attn_hidden
  Vec attn_v;      // attn_hidden
  Matrix scene_w;  // joint_dim x scene_dim
  Vec scene_b;     // joint_dim
};

// Named view over every tensor in a Parameters, in a fixed order. Adam,
// checkpointing and the finite-difference loops all walk this.
struct TensorRef {
  std::string name;
  double* data;
  int rows, cols;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

std::vector<TensorRef> tensor_refs(Parameters& p);
std::size_t parameter_count(const Parameters& p);

// Uniform(-r, r) with r = sqrt(6/(fan_in+fan_out)); biases zero except the
// carry-gate biases, which start at -1 so the carry path is open early.
Parameters init_parameters(const EncoderConfig& cfg, std::uint64_t seed);
Parameters zeros_like(const Parameters& p);

struct LayerTrace {
  Matrix mfcc;                    // T x input_dim
  Matrix conv;                    // T' x d
  std::vector<Matrix> recurrent;  // k matrices, T' x rhn_dim, post-residual
  Vec attention;                  // T', sums to 1
  Vec embedding;                  // joint_dim, unit norm
};

// Per-utterance intermediates kept for the backward pass.
struct RhnLayerCache {
  // state[l] row t = state after microstep l at timestep t; state[0] row t is
  // the incoming state (zero at t = 0)
  std::vector<Matrix> state;
  std::vector<Matrix> h;       // per microstep, T' x rhn_dim
  std::vector<Matrix> t_gate;  // per microstep, T' x rhn_dim
};

struct EncodeCache {
  Matrix conv_out;
  std::vector<Matrix> layer_inputs;   // input sequence of each RHN layer
  std::vector<Matrix> layer_outputs;  // post-residual output of each layer
  std::vector<RhnLayerCache> layers;
  Matrix attn_g;     // T' x attn_hidden, tanh(U h_t + bias)
  Vec attn_weights;  // T'
  Vec pooled;        // rhn_dim, pre-normalization
  double pooled_norm = 0.0;
  Vec embedding;
};

// out[j] = bias + sum_a x[z*j + a] * K[a]; linear, no pointwise nonlinearity.
Matrix conv1d_forward(const Matrix& x, const Parameters& p, const EncoderConfig& cfg);

// Coupled-carry RHN layer over a sequence; state starts at zero.
Matrix rhn_layer_forward(const Matrix& x_seq, const RhnLayerParams& lp, int microsteps,
                         RhnLayerCache* cache = nullptr);

// k layers; layer 1 maps conv width to rhn_dim, layers >= 2 add a residual.
std::vector<Matrix> rhn_stack_forward(const Matrix& conv_out, const Parameters& p,
                                      const EncoderConfig& cfg);

struct AttnResult {
  Vec pooled;   // rhn_dim
  Vec weights;  // T' simplex
};

AttnResult attention_pool(const Matrix& h_seq, const Parameters& p);

struct EncodeResult {
  Vec embedding;
  LayerTrace trace;
};

// unit(Attn(RHN(Conv(mfcc)))) with the full per-layer trace retained.
EncodeResult encode_utterance(const dsp::FeatureMatrix& features, const Parameters& p,
                              const EncoderConfig& cfg);

// Same forward pass, but fills the backward-pass cache instead of a trace.
Vec encode_utterance_cached(const Matrix& features, const Parameters& p, const EncoderConfig& cfg,
                            EncodeCache& cache);

// Affine scene map W*s + b, before normalization.
Vec scene_project(const Vec& scene, const Parameters& p);
// unit(W*s + b)
Vec encode_scene(const Vec& scene, const Parameters& p);

// v / ||v||; errors on an exactly zero vector.
Vec unit(const Vec& v);

// Single-file checkpoint: magic, JSON header (config, tensor table), raw
// little-endian 64-bit payload. Round-trips bitwise.
void save_checkpoint(const std::string& path, const Parameters& p, const EncoderConfig& cfg);

struct Checkpoint {
  EncoderConfig cfg;
  Parameters params;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace phonoprobe::enc

#endif  // PHONOPROBE_ENCODER_HPP
