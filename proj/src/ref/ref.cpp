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

#include "ref.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace phonoprobe::ref {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Vec naive_power_spectrum(const double* frame, int frame_len, int n_fft) {
  Vec power(n_fft / 2 + 1, 0.0);
  for (int b = 0; b <= n_fft / 2; ++b) {
    double re = 0.0, im = 0.0;
    for (int i = 0; i < frame_len; ++i) {
      const double ang = -2.0 * kPi * b * i / n_fft;
      re += frame[i] * std::cos(ang);
      im += frame[i] * std::sin(ang);
    }
    power[b] = re * re + im * im;
  }
  return power;
}

namespace {

int pow2_at_least(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

}  // namespace

double band_power_fraction(const Vec& samples, int sample_rate,
                           const std::vector<double>& targets_hz, double half_width_hz) {
  const int n = static_cast<int>(samples.size());
  const int n_fft = pow2_at_least(n);
  const Vec power = naive_power_spectrum(samples.data(), n, n_fft);
  double total = 0.0, in_band = 0.0;
  for (std::size_t b = 1; b < power.size(); ++b) {  // skip DC
    const double f = static_cast<double>(b) * sample_rate / n_fft;
    total += power[b];
    for (double target : targets_hz) {
      if (std::abs(f - target) <= half_width_hz) {
        in_band += power[b];
        break;
      }
    }
  }
  return total > 0.0 ? in_band / total : 0.0;
}

double spectral_flatness(const Vec& samples) {
  const int n = static_cast<int>(samples.size());
  const int n_fft = pow2_at_least(n);
  const Vec power = naive_power_spectrum(samples.data(), n, n_fft);
  double log_sum = 0.0, sum = 0.0;
  int count = 0;
  for (std::size_t b = 1; b < power.size(); ++b) {
    const double p = std::max(power[b], 1e-30);
    log_sum += std::log(p);
    sum += p;
    ++count;
  }
  return std::exp(log_sum / count) / (sum / count);
}

Matrix rhn_layer_scalar(const Matrix& x_seq, const enc::RhnLayerParams& lp, int microsteps) {
  const int dim = lp.w_h.rows;
  const int in_dim = lp.w_h.cols;
  const int t_len = x_seq.rows;
  Matrix out(t_len, dim);
  std::vector<double> s(dim, 0.0), s_next(dim, 0.0);
  for (int t = 0; t < t_len; ++t) {
    for (int l = 0; l < microsteps; ++l) {
      for (int i = 0; i < dim; ++i) {
        double ah = lp.b_h[l][i];
        double at = lp.b_t[l][i];
        for (int j = 0; j < dim; ++j) {
          ah += lp.r_h[l](i, j) * s[j];
          at += lp.r_t[l](i, j) * s[j];
        }
        if (l == 0) {
          for (int j = 0; j < in_dim; ++j) {
            ah += lp.w_h(i, j) * x_seq(t, j);
            at += lp.w_t(i, j) * x_seq(t, j);
          }
        }
        const double h = std::tanh(ah);
        const double gate = 1.0 / (1.0 + std::exp(-at));
        s_next[i] = h * gate + s[i] * (1.0 - gate);
      }
      s = s_next;
    }
    for (int i = 0; i < dim; ++i) out(t, i) = s[i];
  }
  return out;
}

namespace {

// within-cluster sum of squared deviations from the centroid
double ess(const Matrix& points, const std::vector<int>& members) {
  const int d = points.cols;
  Vec centroid(d, 0.0);
  for (int idx : members) {
    for (int j = 0; j < d; ++j) centroid[j] += points(idx, j);
  }
  for (double& c : centroid) c /= static_cast<double>(members.size());
  double total = 0.0;
  for (int idx : members) {
    for (int j = 0; j < d; ++j) {
      const double diff = points(idx, j) - centroid[j];
      total += diff * diff;
    }
  }
  return total;
}

}  // namespace

std::vector<NaiveMerge> ward_naive(const Matrix& points) {
  const int p = points.rows;
  if (p < 2) throw std::invalid_argument("ward_naive: need at least two points");

  struct Cluster {
    int id;
    std::vector<int> members;
  };
  std::vector<Cluster> active;
  for (int i = 0; i < p; ++i) active.push_back({i, {i}});

  std::vector<NaiveMerge> merges;
  int next_id = p;
  while (active.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        std::vector<int> merged = active[i].members;
        merged.insert(merged.end(), active[j].members.begin(), active[j].members.end());
        const double cost =
            ess(points, merged) - ess(points, active[i].members) - ess(points, active[j].members);
        const int lo = std::min(active[i].id, active[j].id);
        const int hi = std::max(active[i].id, active[j].id);
        const int blo = std::min(active[bi].id, active[bj].id);
        const int bhi = std::max(active[bi].id, active[bj].id);
        if (cost < best || (cost == best && (lo < blo || (lo == blo && hi < bhi)))) {
          best = cost;
          bi = i;
          bj = j;
        }
      }
    }
    Cluster merged;
    merged.id = next_id++;
    merged.members = active[bi].members;
    merged.members.insert(merged.members.end(), active[bj].members.begin(), active[bj].members.end());
    NaiveMerge m;
    m.a = std::min(active[bi].id, active[bj].id);
    m.b = std::max(active[bi].id, active[bj].id);
    m.height = std::sqrt(2.0 * std::max(best, 0.0));
    m.size = static_cast<int>(merged.members.size());
    merges.push_back(m);
    // erase the higher index first
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(std::max(bi, bj)));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(std::min(bi, bj)));
    active.push_back(std::move(merged));
  }
  return merges;
}

double adjusted_rand_index_brute(const std::vector<int>& p1, const std::vector<int>& p2) {
  if (p1.size() != p2.size()) throw std::invalid_argument("ARI: partition size mismatch");
  const std::size_t n = p1.size();
  double a = 0, b = 0, c = 0, d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same1 = p1[i] == p1[j];
      const bool same2 = p2[i] == p2[j];
      if (same1 && same2) ++a;
      else if (same1 && !same2) ++b;
      else if (!same1 && same2) ++c;
      else ++d;
    }
  }
  const double denom = (a + b) * (b + d) + (a + c) * (c + d);
  if (denom == 0.0) {
    // degenerate: both partitions carry the same (trivial) pair structure
    return (b == 0 && c == 0) ? 1.0 : 0.0;
  }
  return 2.0 * (a * d - b * c) / denom;
}

double pearson_direct(const Vec& x, const Vec& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson_direct: bad input");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson_direct: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

Vec central_difference(const std::function<double()>& eval, double* x, std::size_t n, double h) {
  Vec grad(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = eval();
    x[i] = saved - h;
    const double down = eval();
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace phonoprobe::ref
