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

#ifndef PHONOPROBE_LINALG_HPP
#define PHONOPROBE_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace phonoprobe {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. All model tensors and feature matrices
// use this; accumulation order is fixed by the loops below, which is what
// keeps results identical across worker counts.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }

  std::span<const double> row_span(int i) const { return {row(i), static_cast<std::size_t>(cols)}; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }

  void set_zero() { std::fill(data.begin(), data.end(), 0.0); }
};

namespace la {

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  return dot(a.data(), b.data(), static_cast<int>(a.size()));
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a.data(), a.data(), static_cast<int>(a.size()))); }

// y = M x
inline void matvec(const Matrix& m, const double* x, double* y) {
  for (int i = 0; i < m.rows; ++i) y[i] = dot(m.row(i), x, m.cols);
}

inline Vec matvec(const Matrix& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.cols) throw std::invalid_argument("matvec: size mismatch");
  Vec y(m.rows);
  matvec(m, x.data(), y.data());
  return y;
}

// y += M x
inline void matvec_acc(const Matrix& m, const double* x, double* y) {
  for (int i = 0; i < m.rows; ++i) y[i] += dot(m.row(i), x, m.cols);
}

// y += M^T g   (g has m.rows entries, y has m.cols entries)
inline void mat_t_vec_acc(const Matrix& m, const double* g, double* y) {
  for (int i = 0; i < m.rows; ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    const double* r = m.row(i);
    for (int j = 0; j < m.cols; ++j) y[j] += gi * r[j];
  }
}

// A += g x^T   (outer-product accumulation for weight gradients)
inline void outer_acc(Matrix& a, const double* g, const double* x) {
  for (int i = 0; i < a.rows; ++i) {
    const double gi = g[i];
    if (gi == 0.0) continue;
    double* r = a.row(i);
    for (int j = 0; j < a.cols; ++j) r[j] += gi * x[j];
  }
}

inline void axpy(double alpha, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Numerically stable softmax over an arbitrary score vector.
inline Vec softmax(const Vec& e) {
  double m = e[0];
  for (double v : e) m = std::max(m, v);
  Vec w(e.size());
  double z = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    w[i] = std::exp(e[i] - m);
    z += w[i];
  }
  for (double& v : w) v /= z;
  return w;
}

inline bool all_finite(const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

inline bool all_finite(const Vec& x) { return all_finite(x.data(), x.size()); }
inline bool all_finite(const Matrix& m) { return all_finite(m.data.data(), m.size()); }

}  // namespace la
}  // namespace phonoprobe

#endif  // PHONOPROBE_LINALG_HPP
