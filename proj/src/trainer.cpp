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

#include "phonoprobe/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "phonoprobe/util.hpp"

namespace phonoprobe::train {

using enc::EncodeCache;
using enc::EncoderConfig;
using enc::Parameters;
using enc::RhnLayerParams;
using util::derive_seed;
using util::Rng;

void TrainConfig::validate() const {
  if (margin <= 0.0) throw std::invalid_argument("train config: margin must be positive");
  if (batch_size < 2) throw std::invalid_argument("train config: batch_size must be >= 2");
  if (epochs < 0) throw std::invalid_argument("train config: epochs must be >= 0");
  if (learning_rate <= 0.0) throw std::invalid_argument("train config: learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("train config: betas must lie in [0,1)");
  }
  if (epsilon <= 0.0) throw std::invalid_argument("train config: epsilon must be positive");
  if (checkpoint_every < 0) throw std::invalid_argument("train config: checkpoint_every must be >= 0");
}

double cosine_distance(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_distance: size mismatch");
  const double na = la::norm2(a);
  const double nb = la::norm2(b);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_distance: zero vector");
  return 1.0 - la::dot(a, b) / (na * nb);
}

double contrastive_loss(const std::vector<Vec>& utterances, const std::vector<Vec>& scenes,
                        double margin) {
  const std::size_t b = utterances.size();
  if (b < 1 || scenes.size() != b) throw std::invalid_argument("contrastive_loss: bad batch");
  Matrix dist(static_cast<int>(b), static_cast<int>(b));
  for (std::size_t p = 0; p < b; ++p) {
    for (std::size_t q = 0; q < b; ++q) dist(static_cast<int>(p), static_cast<int>(q)) = cosine_distance(utterances[p], scenes[q]);
  }
  double loss = 0.0;
  for (std::size_t p = 0; p < b; ++p) {
    const double base = dist(static_cast<int>(p), static_cast<int>(p));
    for (std::size_t q = 0; q < b; ++q) {
      if (q == p) continue;
      loss += std::max(0.0, margin + base - dist(static_cast<int>(q), static_cast<int>(p)));
      loss += std::max(0.0, margin + base - dist(static_cast<int>(p), static_cast<int>(q)));
    }
  }
  return loss;
}

namespace {

// d cosdist(a,b) / da, general (non-unit) form so finite differences agree
void cosine_distance_grad_a(const Vec& a, const Vec& b, double coeff, Vec& out) {
  const double na = la::norm2(a);
  const double nb = la::norm2(b);
  const double ab = la::dot(a, b);
  const double inv = 1.0 / (na * nb);
  const double scale = ab / (na * na * na * nb);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += coeff * (-b[i] * inv + a[i] * scale);
}

// dx = (dy - y (y . dy)) / |x|, for y = x / |x|
Vec unit_backward(const Vec& y, double norm, const Vec& dy) {
  const double proj = la::dot(y, dy);
  Vec dx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = (dy[i] - y[i] * proj) / norm;
  return dx;
}

// backward through one RHN layer; accumulates parameter grads and returns
// the gradient with respect to the layer's input sequence
Matrix rhn_layer_backward(const Matrix& x_seq, const RhnLayerParams& lp,
                          const enc::RhnLayerCache& cache, const Matrix& dout,
                          RhnLayerParams& grads, int microsteps) {
  const int t_len = x_seq.rows;
  const int dim = lp.w_h.rows;
  Matrix dx(t_len, x_seq.cols);
  Vec ds(dim, 0.0), ds_carry(dim, 0.0), da_h(dim), da_t(dim), ds_pre(dim);
  for (int t = t_len - 1; t >= 0; --t) {
    for (int i = 0; i < dim; ++i) ds[i] = dout(t, i) + ds_carry[i];
    for (int l = microsteps - 1; l >= 0; --l) {
      const double* s_pre = cache.state[l].row(t);
      const double* h = cache.h[l].row(t);
      const double* gate = cache.t_gate[l].row(t);
      for (int i = 0; i < dim; ++i) {
        const double dh = ds[i] * gate[i];
        const double dgate = ds[i] * (h[i] - s_pre[i]);
        ds_pre[i] = ds[i] * (1.0 - gate[i]);
        da_h[i] = dh * (1.0 - h[i] * h[i]);
        da_t[i] = dgate * gate[i] * (1.0 - gate[i]);
      }
      la::outer_acc(grads.r_h[l], da_h.data(), s_pre);
      la::outer_acc(grads.r_t[l], da_t.data(), s_pre);
      for (int i = 0; i < dim; ++i) {
        grads.b_h[l][i] += da_h[i];
        grads.b_t[l][i] += da_t[i];
      }
      la::mat_t_vec_acc(lp.r_h[l], da_h.data(), ds_pre.data());
      la::mat_t_vec_acc(lp.r_t[l], da_t.data(), ds_pre.data());
      if (l == 0) {
        la::outer_acc(grads.w_h, da_h.data(), x_seq.row(t));
        la::outer_acc(grads.w_t, da_t.data(), x_seq.row(t));
        la::mat_t_vec_acc(lp.w_h, da_h.data(), dx.row(t));
        la::mat_t_vec_acc(lp.w_t, da_t.data(), dx.row(t));
      }
      std::swap(ds, ds_pre);
    }
    std::copy(ds.begin(), ds.end(), ds_carry.begin());
  }
  return dx;
}

// backward from the embedding gradient all the way to parameter grads
void utterance_backward(const Matrix& features, const Parameters& params,
                        const EncoderConfig& cfg, const EncodeCache& cache,
                        const Vec& d_embedding, Parameters& grads) {
  const Vec d_pooled = unit_backward(cache.embedding, cache.pooled_norm, d_embedding);

  // attention
  const Matrix& top = cache.layer_outputs.back();
  const int t_len = top.rows;
  const int dim = top.cols;
  Vec dw(t_len);
  Matrix d_top(t_len, dim);
  for (int t = 0; t < t_len; ++t) {
    dw[t] = la::dot(d_pooled.data(), top.row(t), dim);
    la::axpy(cache.attn_weights[t], d_pooled.data(), d_top.row(t), dim);
  }
  double mixed = 0.0;
  for (int t = 0; t < t_len; ++t) mixed += cache.attn_weights[t] * dw[t];
  Vec dz(params.attn_u.rows);
  for (int t = 0; t < t_len; ++t) {
    const double de = cache.attn_weights[t] * (dw[t] - mixed);  // softmax backward
    for (int i = 0; i < params.attn_u.rows; ++i) {
      const double g = cache.attn_g(t, i);
      grads.attn_v[i] += de * g;
      dz[i] = de * params.attn_v[i] * (1.0 - g * g);
    }
    la::outer_acc(grads.attn_u, dz.data(), top.row(t));
    for (int i = 0; i < params.attn_u.rows; ++i) grads.attn_bias[i] += dz[i];
    la::mat_t_vec_acc(params.attn_u, dz.data(), d_top.row(t));
  }

  // recurrent stack, top down; residual layers pass the gradient through
  Matrix dout = std::move(d_top);
  for (int j = cfg.rhn_layers - 1; j >= 0; --j) {
    Matrix dinput = rhn_layer_backward(cache.layer_inputs[j], params.layers[j], cache.layers[j],
                                       dout, grads.layers[j], cfg.microsteps);
    if (j > 0) {
      for (std::size_t i = 0; i < dinput.size(); ++i) dinput.data[i] += dout.data[i];
    }
    dout = std::move(dinput);
  }

  // convolution: dout is now the gradient at the conv output; the window is
  // the s contiguous input rows starting at j*stride
  for (int j = 0; j < dout.rows; ++j) {
    const double* win = features.row(j * cfg.conv_stride);
    la::outer_acc(grads.conv_kernel, win, dout.row(j));
    la::axpy(1.0, dout.row(j), grads.conv_bias.data(), cfg.conv_size);
  }
}

void scene_backward(const Vec& scene, const Vec& projected_unit, double norm, const Vec& d_embedding,
                    Parameters& grads) {
  const Vec dz = unit_backward(projected_unit, norm, d_embedding);
  la::outer_acc(grads.scene_w, dz.data(), scene.data());
  for (std::size_t i = 0; i < dz.size(); ++i) grads.scene_b[i] += dz[i];
}

}  // namespace

LossGradients loss_gradients(const Batch& batch, const Parameters& params,
                             const EncoderConfig& cfg, double margin) {
  const int b = static_cast<int>(batch.features.size());
  if (b < 1 || batch.scenes.size() != batch.features.size()) {
    throw std::invalid_argument("loss_gradients: empty or mismatched batch");
  }

  // forward passes, parallel per example
  std::vector<EncodeCache> caches(b);
  std::vector<Vec> u_emb(b), i_proj(b), i_emb(b);
  std::vector<double> i_norm(b);
  util::parallel_for(b, [&](std::int64_t idx) {
    const int p = static_cast<int>(idx);
    u_emb[p] = enc::encode_utterance_cached(*batch.features[p], params, cfg, caches[p]);
    i_proj[p] = enc::scene_project(*batch.scenes[p], params);
    const double norm = la::norm2(i_proj[p]);
    if (norm == 0.0) throw std::runtime_error("loss_gradients: degenerate scene projection");
    i_norm[p] = norm;
    i_emb[p].assign(i_proj[p].size(), 0.0);
    for (std::size_t i = 0; i < i_proj[p].size(); ++i) i_emb[p][i] = i_proj[p][i] / norm;
  });

  // hinge bookkeeping on the distance matrix
  Matrix dist(b, b);
  for (int p = 0; p < b; ++p) {
    for (int q = 0; q < b; ++q) dist(p, q) = cosine_distance(u_emb[p], i_emb[q]);
  }
  double loss = 0.0;
  Matrix coeff(b, b);  // dLoss / dDist
  for (int p = 0; p < b; ++p) {
    const double base = dist(p, p);
    for (int q = 0; q < b; ++q) {
      if (q == p) continue;
      const double arg_u = margin + base - dist(q, p);
      if (arg_u > 0.0) {
        loss += arg_u;
        coeff(p, p) += 1.0;
        coeff(q, p) -= 1.0;
      }
      const double arg_i = margin + base - dist(p, q);
      if (arg_i > 0.0) {
        loss += arg_i;
        coeff(p, p) += 1.0;
        coeff(p, q) -= 1.0;
      }
    }
  }

  // embedding gradients
  std::vector<Vec> du(b, Vec(u_emb[0].size(), 0.0));
  std::vector<Vec> di(b, Vec(i_emb[0].size(), 0.0));
  for (int p = 0; p < b; ++p) {
    for (int q = 0; q < b; ++q) {
      const double c = coeff(p, q);
      if (c == 0.0) continue;
      cosine_distance_grad_a(u_emb[p], i_emb[q], c, du[p]);
      cosine_distance_grad_a(i_emb[q], u_emb[p], c, di[q]);
    }
  }

  // per-example backward passes into separate slots, then an ordered sum
  std::vector<Parameters> slots(b, enc::zeros_like(params));
  util::parallel_for(b, [&](std::int64_t idx) {
    const int p = static_cast<int>(idx);
    utterance_backward(*batch.features[p], params, cfg, caches[p], du[p], slots[p]);
    scene_backward(*batch.scenes[p], i_emb[p], i_norm[p], di[p], slots[p]);
  });

  LossGradients out;
  out.loss = loss;
  out.grads = enc::zeros_like(params);
  std::vector<enc::TensorRef> total = enc::tensor_refs(out.grads);
  for (int p = 0; p < b; ++p) {
    std::vector<enc::TensorRef> part = enc::tensor_refs(slots[p]);
    for (std::size_t t = 0; t < total.size(); ++t) {
      for (std::size_t i = 0; i < total[t].size(); ++i) total[t].data[i] += part[t].data[i];
    }
  }
  for (const enc::TensorRef& t : total) {
    if (!la::all_finite(t.data, t.size())) {
      throw std::runtime_error("loss_gradients: non-finite gradient in tensor " + t.name);
    }
  }
  return out;
}

AdamState init_adam_state(const Parameters& params) {
  AdamState state;
  state.m = enc::zeros_like(params);
  state.v = enc::zeros_like(params);
  state.step = 0;
  return state;
}

void adam_step(Parameters& params, const GradientSet& grads, AdamState& state,
               const TrainConfig& cfg) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  std::vector<enc::TensorRef> p = enc::tensor_refs(params);
  std::vector<enc::TensorRef> g = enc::tensor_refs(const_cast<GradientSet&>(grads));
  std::vector<enc::TensorRef> m = enc::tensor_refs(state.m);
  std::vector<enc::TensorRef> v = enc::tensor_refs(state.v);
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t].size() != g[t].size()) throw std::invalid_argument("adam_step: gradient shape mismatch");
    for (std::size_t i = 0; i < p[t].size(); ++i) {
      const double gi = g[t].data[i];
      m[t].data[i] = cfg.beta1 * m[t].data[i] + (1.0 - cfg.beta1) * gi;
      v[t].data[i] = cfg.beta2 * v[t].data[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[t].data[i] / bc1;
      const double v_hat = v[t].data[i] / bc2;
      const double update = cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
      if (!std::isfinite(update)) {
        throw std::runtime_error("adam_step: non-finite update in tensor " + p[t].name);
      }
      p[t].data[i] -= update;
    }
  }
}

Recall retrieval_recall(const std::vector<Vec>& query_embeddings,
                        const std::vector<Vec>& scene_embeddings) {
  const std::size_t n = query_embeddings.size();
  if (n == 0 || scene_embeddings.size() != n) throw std::invalid_argument("retrieval_recall: bad input");
  std::vector<int> rank(n, 0);
  util::parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t q) {
    const double matched = cosine_distance(query_embeddings[q], scene_embeddings[q]);
    int position = 0;
    for (std::size_t s = 0; s < n; ++s) {
      if (s == static_cast<std::size_t>(q)) continue;
      const double d = cosine_distance(query_embeddings[q], scene_embeddings[s]);
      if (d < matched || (d == matched && s < static_cast<std::size_t>(q))) ++position;
    }
    rank[q] = position;
  });
  Recall rec;
  for (std::size_t q = 0; q < n; ++q) {
    if (rank[q] == 0) rec.at_1 += 1.0;
    if (rank[q] < 5) rec.at_5 += 1.0;
  }
  rec.at_1 /= static_cast<double>(n);
  rec.at_5 /= static_cast<double>(n);
  return rec;
}

TrainResult train_model(const corpus::Corpus& corpus, const dsp::MfccConfig& mfcc_cfg,
                        const EncoderConfig& enc_cfg, const TrainConfig& train_cfg,
                        const CheckpointSink& sink) {
  enc_cfg.validate();
  train_cfg.validate();
  if (corpus.train.empty()) throw std::invalid_argument("train_model: empty training set");
  if (train_cfg.batch_size > static_cast<int>(corpus.train.size())) {
    throw std::invalid_argument("train_model: batch_size exceeds the training set");
  }
  if (enc_cfg.input_dim != mfcc_cfg.n_ceps) {
    throw std::invalid_argument("train_model: encoder input_dim must match mfcc n_ceps");
  }
  if (enc_cfg.scene_dim != corpus.cfg.scene_dim) {
    throw std::invalid_argument("train_model: encoder scene_dim must match the corpus");
  }

  const int n_train = static_cast<int>(corpus.train.size());
  const int n_val = static_cast<int>(corpus.val.size());

  std::vector<Matrix> train_feats(n_train), val_feats(n_val);
  util::parallel_for(n_train + n_val, [&](std::int64_t i) {
    if (i < n_train) {
      train_feats[i] = dsp::mfcc(corpus.train[i].waveform, mfcc_cfg).data;
    } else {
      val_feats[i - n_train] = dsp::mfcc(corpus.val[i - n_train].waveform, mfcc_cfg).data;
    }
  });

  TrainResult result;
  result.params = enc::init_parameters(enc_cfg, derive_seed(train_cfg.seed, "init"));
  AdamState adam = init_adam_state(result.params);

  auto evaluate = [&]() -> Recall {
    std::vector<Vec> u(n_val), s(n_val);
    util::parallel_for(n_val, [&](std::int64_t i) {
      enc::EncodeCache cache;
      u[i] = enc::encode_utterance_cached(val_feats[i], result.params, enc_cfg, cache);
      s[i] = enc::encode_scene(corpus.val[i].scene, result.params);
    });
    return retrieval_recall(u, s);
  };

  enc::Parameters last_good = result.params;
  std::vector<int> order(n_train);
  for (int i = 0; i < n_train; ++i) order[i] = i;

  for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(derive_seed(train_cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    for (int i = n_train - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    int examples = 0;
    bool diverged = false;
    for (int start = 0; start + 1 < n_train; start += train_cfg.batch_size) {
      const int size = std::min(train_cfg.batch_size, n_train - start);
      if (size < 2) break;
      Batch batch;
      for (int i = 0; i < size; ++i) {
        batch.features.push_back(&train_feats[order[start + i]]);
        batch.scenes.push_back(&corpus.train[order[start + i]].scene);
      }
      LossGradients lg;
      try {
        lg = loss_gradients(batch, result.params, enc_cfg, train_cfg.margin);
      } catch (const std::runtime_error&) {
        diverged = true;
        break;
      }
      if (!std::isfinite(lg.loss)) {
        diverged = true;
        break;
      }
      adam_step(result.params, lg.grads, adam, train_cfg);
      epoch_loss += lg.loss;
      examples += size;
    }
    if (diverged) {
      result.params = last_good;
      result.diverged = true;
      break;
    }

    const Recall recall = evaluate();
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = examples > 0 ? epoch_loss / examples : 0.0;
    stats.recall_at_1 = recall.at_1;
    stats.recall_at_5 = recall.at_5;
    stats.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(stats);

    last_good = result.params;
    if (sink && train_cfg.checkpoint_every > 0 && epoch % train_cfg.checkpoint_every == 0 &&
        epoch != train_cfg.epochs) {
      sink(epoch, result.params, false);
    }
  }

  if (sink) sink(train_cfg.epochs, result.params, true);
  return result;
}

std::string log_to_csv(const std::vector<EpochStats>& log) {
  std::string out = "epoch,mean_loss,recall_at_1,recall_at_5,wall_seconds\n";
  char buf[160];
  for (const EpochStats& s : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.3f\n", s.epoch, s.mean_loss,
                  s.recall_at_1, s.recall_at_5, s.wall_seconds);
    out += buf;
  }
  return out;
}

}  // namespace phonoprobe::train
