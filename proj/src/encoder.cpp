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

#include "phonoprobe/encoder.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "phonoprobe/util.hpp"

namespace phonoprobe::enc {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint/archive payloads are little-endian");

void EncoderConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v <= 0) throw std::invalid_argument(std::string("encoder config: ") + name + " must be positive");
  };
  positive(input_dim, "input_dim");
  positive(conv_length, "conv_length");
  positive(conv_size, "conv_size");
  positive(conv_stride, "conv_stride");
  positive(rhn_layers, "rhn_layers");
  positive(rhn_dim, "rhn_dim");
  positive(microsteps, "microsteps");
  positive(attn_hidden, "attn_hidden");
  positive(joint_dim, "joint_dim");
  positive(scene_dim, "scene_dim");
  if (joint_dim != rhn_dim) {
    throw std::invalid_argument(
        "encoder config: joint_dim must equal rhn_dim (the utterance embedding is the "
        "normalized attention pool of the top recurrent layer)");
  }
}

EncoderConfig EncoderConfig::paper_reference() {
  EncoderConfig cfg;
  cfg.input_dim = 13;
  cfg.conv_length = 6;
  cfg.conv_size = 64;
  cfg.conv_stride = 3;
  cfg.rhn_layers = 5;
  cfg.rhn_dim = 512;
  cfg.microsteps = 2;
  cfg.attn_hidden = 512;
  cfg.joint_dim = 512;
  cfg.scene_dim = 4096;
  return cfg;
}

std::vector<TensorRef> tensor_refs(Parameters& p) {
  std::vector<TensorRef> refs;
  auto mat = [&](const std::string& name, Matrix& m) {
    refs.push_back({name, m.data.data(), m.rows, m.cols});
  };
  auto vec = [&](const std::string& name, Vec& v) {
    refs.push_back({name, v.data(), 1, static_cast<int>(v.size())});
  };
  mat("conv.kernel", p.conv_kernel);
  vec("conv.bias", p.conv_bias);
  for (std::size_t j = 0; j < p.layers.size(); ++j) {
    const std::string base = "rhn" + std::to_string(j + 1);
    RhnLayerParams& lp = p.layers[j];
    mat(base + ".w_h", lp.w_h);
    mat(base + ".w_t", lp.w_t);
    for (std::size_t l = 0; l < lp.r_h.size(); ++l) {
      const std::string ms = std::to_string(l + 1);
      mat(base + ".r_h." + ms, lp.r_h[l]);
      mat(base + ".r_t." + ms, lp.r_t[l]);
      vec(base + ".b_h." + ms, lp.b_h[l]);
      vec(base + ".b_t." + ms, lp.b_t[l]);
    }
  }
  mat("attn.u", p.attn_u);
  vec("attn.bias", p.attn_bias);
  vec("attn.v", p.attn_v);
  mat("scene.w", p.scene_w);
  vec("scene.b", p.scene_b);
  return refs;
}

std::size_t parameter_count(const Parameters& p) {
  std::size_t n = 0;
  for (const TensorRef& t : tensor_refs(const_cast<Parameters&>(p))) n += t.size();
  return n;
}

namespace {

Parameters make_shape(const EncoderConfig& cfg) {
  Parameters p;
  p.conv_kernel = Matrix(cfg.conv_length * cfg.input_dim, cfg.conv_size);
  p.conv_bias.assign(cfg.conv_size, 0.0);
  p.layers.resize(cfg.rhn_layers);
  for (int j = 0; j < cfg.rhn_layers; ++j) {
    const int in_dim = j == 0 ? cfg.conv_size : cfg.rhn_dim;
    RhnLayerParams& lp = p.layers[j];
    lp.w_h = Matrix(cfg.rhn_dim, in_dim);
    lp.w_t = Matrix(cfg.rhn_dim, in_dim);
    lp.r_h.assign(cfg.microsteps, Matrix(cfg.rhn_dim, cfg.rhn_dim));
    lp.r_t.assign(cfg.microsteps, Matrix(cfg.rhn_dim, cfg.rhn_dim));
    lp.b_h.assign(cfg.microsteps, Vec(cfg.rhn_dim, 0.0));
    lp.b_t.assign(cfg.microsteps, Vec(cfg.rhn_dim, 0.0));
  }
  p.attn_u = Matrix(cfg.attn_hidden, cfg.rhn_dim);
  p.attn_bias.assign(cfg.attn_hidden, 0.0);
  p.attn_v.assign(cfg.attn_hidden, 0.0);
  p.scene_w = Matrix(cfg.joint_dim, cfg.scene_dim);
  p.scene_b.assign(cfg.joint_dim, 0.0);
  return p;
}

}  // namespace

Parameters init_parameters(const EncoderConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Parameters p = make_shape(cfg);
  util::Rng rng(seed);
  for (TensorRef& t : tensor_refs(p)) {
    if (t.rows == 1) continue;  // biases stay zero here
    const double r = std::sqrt(6.0 / (t.rows + t.cols));
    for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = rng.uniform(-r, r);
  }
  // open the carry gates: sigmoid(-1) keeps most of the previous state
  for (RhnLayerParams& lp : p.layers) {
    for (Vec& b : lp.b_t) std::fill(b.begin(), b.end(), -1.0);
  }
  return p;
}

Parameters zeros_like(const Parameters& p) {
  Parameters z = p;
  for (TensorRef& t : tensor_refs(z)) std::fill(t.data, t.data + t.size(), 0.0);
  return z;
}

Matrix conv1d_forward(const Matrix& x, const Parameters& p, const EncoderConfig& cfg) {
  if (x.cols != cfg.input_dim) throw std::invalid_argument("conv1d_forward: input width mismatch");
  if (x.rows < cfg.conv_length) throw std::invalid_argument("conv1d_forward: utterance too short");
  const int t_out = cfg.conv_steps(x.rows);
  const int window = cfg.conv_length * cfg.input_dim;
  Matrix out(t_out, cfg.conv_size);
  for (int j = 0; j < t_out; ++j) {
    double* row = out.row(j);
    std::copy(p.conv_bias.begin(), p.conv_bias.end(), row);
    const double* win = x.row(j * cfg.conv_stride);  // s input rows are contiguous
    for (int f = 0; f < window; ++f) {
      la::axpy(win[f], p.conv_kernel.row(f), row, cfg.conv_size);
    }
  }
  return out;
}

Matrix rhn_layer_forward(const Matrix& x_seq, const RhnLayerParams& lp, int microsteps,
                         RhnLayerCache* cache) {
  const int dim = lp.w_h.rows;
  const int in_dim = lp.w_h.cols;
  if (x_seq.cols != in_dim) throw std::invalid_argument("rhn_layer_forward: dimension mismatch");
  if (static_cast<int>(lp.r_h.size()) != microsteps) {
    throw std::invalid_argument("rhn_layer_forward: microstep parameter count mismatch");
  }
  const int t_len = x_seq.rows;

  if (cache != nullptr) {
    cache->state.assign(microsteps + 1, Matrix(t_len, dim));
    cache->h.assign(microsteps, Matrix(t_len, dim));
    cache->t_gate.assign(microsteps, Matrix(t_len, dim));
  }

  Matrix out(t_len, dim);
  Vec state(dim, 0.0);
  Vec wx_h(dim), wx_t(dim), a_h(dim), a_t(dim);
  for (int t = 0; t < t_len; ++t) {
    la::matvec(lp.w_h, x_seq.row(t), wx_h.data());
    la::matvec(lp.w_t, x_seq.row(t), wx_t.data());
    if (cache != nullptr) std::copy(state.begin(), state.end(), cache->state[0].row(t));
    for (int l = 0; l < microsteps; ++l) {
      std::copy(lp.b_h[l].begin(), lp.b_h[l].end(), a_h.begin());
      std::copy(lp.b_t[l].begin(), lp.b_t[l].end(), a_t.begin());
      la::matvec_acc(lp.r_h[l], state.data(), a_h.data());
      la::matvec_acc(lp.r_t[l], state.data(), a_t.data());
      if (l == 0) {
        for (int i = 0; i < dim; ++i) {
          a_h[i] += wx_h[i];
          a_t[i] += wx_t[i];
        }
      }
      for (int i = 0; i < dim; ++i) {
        const double h = std::tanh(a_h[i]);
        const double gate = la::sigmoid(a_t[i]);
        if (cache != nullptr) {
          cache->h[l](t, i) = h;
          cache->t_gate[l](t, i) = gate;
        }
        state[i] = h * gate + state[i] * (1.0 - gate);  // coupled carry
      }
      if (cache != nullptr) std::copy(state.begin(), state.end(), cache->state[l + 1].row(t));
    }
    std::copy(state.begin(), state.end(), out.row(t));
  }
  return out;
}

std::vector<Matrix> rhn_stack_forward(const Matrix& conv_out, const Parameters& p,
                                      const EncoderConfig& cfg) {
  std::vector<Matrix> outputs;
  const Matrix* input = &conv_out;
  for (int j = 0; j < cfg.rhn_layers; ++j) {
    Matrix out = rhn_layer_forward(*input, p.layers[j], cfg.microsteps);
    if (j > 0) {
      for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += input->data[i];
    }
    outputs.push_back(std::move(out));
    input = &outputs.back();
  }
  return outputs;
}

AttnResult attention_pool(const Matrix& h_seq, const Parameters& p) {
  if (h_seq.rows < 1) throw std::invalid_argument("attention_pool: empty sequence");
  const int t_len = h_seq.rows;
  const int dim = h_seq.cols;
  Vec scores(t_len);
  Vec z(p.attn_u.rows);
  for (int t = 0; t < t_len; ++t) {
    std::copy(p.attn_bias.begin(), p.attn_bias.end(), z.begin());
    la::matvec_acc(p.attn_u, h_seq.row(t), z.data());
    double e = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) e += p.attn_v[i] * std::tanh(z[i]);
    scores[t] = e;
  }
  AttnResult res;
  res.weights = la::softmax(scores);
  res.pooled.assign(dim, 0.0);
  for (int t = 0; t < t_len; ++t) la::axpy(res.weights[t], h_seq.row(t), res.pooled.data(), dim);
  return res;
}

Vec unit(const Vec& v) {
  const double norm = la::norm2(v);
  if (norm == 0.0) throw std::runtime_error("unit: degenerate embedding (zero vector)");
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

EncodeResult encode_utterance(const dsp::FeatureMatrix& features, const Parameters& p,
                              const EncoderConfig& cfg) {
  EncodeResult res;
  res.trace.mfcc = features.data;
  res.trace.conv = conv1d_forward(features.data, p, cfg);
  res.trace.recurrent = rhn_stack_forward(res.trace.conv, p, cfg);
  AttnResult attn = attention_pool(res.trace.recurrent.back(), p);
  res.trace.attention = std::move(attn.weights);
  res.embedding = unit(attn.pooled);
  res.trace.embedding = res.embedding;
  return res;
}

Vec encode_utterance_cached(const Matrix& features, const Parameters& p, const EncoderConfig& cfg,
                            EncodeCache& cache) {
  cache.conv_out = conv1d_forward(features, p, cfg);
  cache.layer_inputs.clear();
  cache.layer_outputs.clear();
  cache.layers.assign(cfg.rhn_layers, RhnLayerCache{});

  const Matrix* input = &cache.conv_out;
  for (int j = 0; j < cfg.rhn_layers; ++j) {
    cache.layer_inputs.push_back(*input);
    Matrix out = rhn_layer_forward(*input, p.layers[j], cfg.microsteps, &cache.layers[j]);
    if (j > 0) {
      for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += input->data[i];
    }
    cache.layer_outputs.push_back(std::move(out));
    input = &cache.layer_outputs.back();
  }

  const Matrix& top = cache.layer_outputs.back();
  const int t_len = top.rows;
  cache.attn_g = Matrix(t_len, p.attn_u.rows);
  Vec scores(t_len);
  Vec z(p.attn_u.rows);
  for (int t = 0; t < t_len; ++t) {
    std::copy(p.attn_bias.begin(), p.attn_bias.end(), z.begin());
    la::matvec_acc(p.attn_u, top.row(t), z.data());
    double e = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double g = std::tanh(z[i]);
      cache.attn_g(t, static_cast<int>(i)) = g;
      e += p.attn_v[i] * g;
    }
    scores[t] = e;
  }
  cache.attn_weights = la::softmax(scores);
  cache.pooled.assign(top.cols, 0.0);
  for (int t = 0; t < t_len; ++t) {
    la::axpy(cache.attn_weights[t], top.row(t), cache.pooled.data(), top.cols);
  }
  cache.pooled_norm = la::norm2(cache.pooled);
  if (cache.pooled_norm == 0.0) throw std::runtime_error("encode_utterance: degenerate embedding");
  cache.embedding.assign(cache.pooled.size(), 0.0);
  for (std::size_t i = 0; i < cache.pooled.size(); ++i) {
    cache.embedding[i] = cache.pooled[i] / cache.pooled_norm;
  }
  return cache.embedding;
}

Vec scene_project(const Vec& scene, const Parameters& p) {
  if (static_cast<int>(scene.size()) != p.scene_w.cols) {
    throw std::invalid_argument("scene_project: scene dimension mismatch");
  }
  Vec out = p.scene_b;
  la::matvec_acc(p.scene_w, scene.data(), out.data());
  return out;
}

Vec encode_scene(const Vec& scene, const Parameters& p) {
  if (!la::all_finite(scene)) throw std::invalid_argument("encode_scene: non-finite scene vector");
  return unit(scene_project(scene, p));
}

// --- checkpoint --------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[8] = {'P', 'H', 'N', 'C', 'K', 'P', 'T', '1'};

json encoder_config_to_json(const EncoderConfig& cfg) {
  return json{{"input_dim", cfg.input_dim},     {"conv_length", cfg.conv_length},
              {"conv_size", cfg.conv_size},     {"conv_stride", cfg.conv_stride},
              {"rhn_layers", cfg.rhn_layers},   {"rhn_dim", cfg.rhn_dim},
              {"microsteps", cfg.microsteps},   {"attn_hidden", cfg.attn_hidden},
              {"joint_dim", cfg.joint_dim},     {"scene_dim", cfg.scene_dim}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  EncoderConfig cfg;
  cfg.input_dim = j.at("input_dim").get<int>();
  cfg.conv_length = j.at("conv_length").get<int>();
  cfg.conv_size = j.at("conv_size").get<int>();
  cfg.conv_stride = j.at("conv_stride").get<int>();
  cfg.rhn_layers = j.at("rhn_layers").get<int>();
  cfg.rhn_dim = j.at("rhn_dim").get<int>();
  cfg.microsteps = j.at("microsteps").get<int>();
  cfg.attn_hidden = j.at("attn_hidden").get<int>();
  cfg.joint_dim = j.at("joint_dim").get<int>();
  cfg.scene_dim = j.at("scene_dim").get<int>();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const Parameters& p, const EncoderConfig& cfg) {
  auto& params = const_cast<Parameters&>(p);
  json header;
  header["format"] = "phonoprobe-checkpoint";
  header["version"] = 1;
  header["encoder"] = encoder_config_to_json(cfg);
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const TensorRef& t : tensor_refs(params)) {
    tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", offset}});
    offset += t.size() * sizeof(double);
  }
  header["tensors"] = tensors;
  const std::string header_str = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_checkpoint: cannot open " + path);
  f.write(kCheckpointMagic, 8);
  const std::uint64_t len = header_str.size();
  f.write(reinterpret_cast<const char*>(&len), 8);
  f.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const TensorRef& t : tensor_refs(params)) {
    f.write(reinterpret_cast<const char*>(t.data), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw std::runtime_error("load_checkpoint: " + path + " is not a checkpoint file");
  }
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), 8);
  std::string header_str(len, '\0');
  f.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!f) throw std::runtime_error("load_checkpoint: truncated header in " + path);
  const json header = json::parse(header_str);

  Checkpoint ckpt;
  ckpt.cfg = encoder_config_from_json(header.at("encoder"));
  ckpt.cfg.validate();
  ckpt.params = make_shape(ckpt.cfg);

  std::vector<TensorRef> refs = tensor_refs(ckpt.params);
  const json& tensors = header.at("tensors");
  if (tensors.size() != refs.size()) throw std::runtime_error("load_checkpoint: tensor count mismatch");
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const json& t = tensors[i];
    if (t.at("name").get<std::string>() != refs[i].name ||
        t.at("rows").get<int>() != refs[i].rows || t.at("cols").get<int>() != refs[i].cols) {
      throw std::runtime_error("load_checkpoint: tensor layout mismatch at " + refs[i].name);
    }
    f.read(reinterpret_cast<char*>(refs[i].data),
           static_cast<std::streamsize>(refs[i].size() * sizeof(double)));
  }
  if (!f) throw std::runtime_error("load_checkpoint: truncated payload in " + path);
  return ckpt;
}

}  // namespace phonoprobe::enc
