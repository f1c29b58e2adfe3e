// Copyright 2026 The skilltok Authors
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

#pragma once

// Differentiable primitives. Every op here has a hand-written backward and is
// covered by the finite-difference suite in tests/test_ops.cpp.
//
// Sequence ops take either [T, C] or batched [B, T, C] inputs; the batched
// form treats each b independently.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "skilltok/rng.hpp"
#include "skilltok/tensor.hpp"

namespace skilltok {

// Row-major Tq x Tk table of allowed query->key links. An empty mask allows
// everything.
struct AttentionMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> allowed;

  static AttentionMask causal(std::size_t n);
  static AttentionMask all(std::size_t rows, std::size_t cols);
  bool empty() const { return allowed.empty(); }
  bool operator()(std::size_t i, std::size_t j) const {
    return empty() || allowed[i * cols + j] != 0;
  }
};

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

// x + y where y's shape equals the trailing dims of x (bias, position table).
Tensor add_broadcast(const Tensor& x, const Tensor& y);

// x[..., K] @ w[K, N] -> [..., N].
Tensor matmul(const Tensor& x, const Tensor& w);
// matmul plus optional bias (pass an undefined tensor for none).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

Tensor tanh(const Tensor& x);
// tanh approximation of GELU.
Tensor gelu(const Tensor& x);
Tensor relu(const Tensor& x);
// Subgradient 0 at 0.
Tensor abs(const Tensor& x);

// Normalizes over the last dimension.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

// Rows of table[V, D] selected by ids -> [ids.size(), D].
Tensor embedding(const Tensor& table, std::span<const int> ids);

Tensor reshape(const Tensor& x, Shape shape);
// Concatenates [B, Ti, C] along the sequence axis.
Tensor concat_seq(const std::vector<Tensor>& parts);
// x[:, start:start+len, :] for [B, T, C].
Tensor slice_seq(const Tensor& x, std::size_t start, std::size_t len);

std::size_t conv_output_length(std::size_t length, std::size_t stride);

// Strided 1D convolution. Output j reads input rows j*stride - pad_left + i for
// i in [0, K), with zeros outside [0, T). pad_left = K-1 is the causal layout.
Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, std::size_t pad_left);
// Causal form: output j depends only on inputs at indices <= j*stride.
Tensor causal_conv1d(const Tensor& input, const Tensor& kernel,
                     std::size_t stride);

// Multi-head scaled dot-product attention over [B, T, D] (or [T, D]).
// Softmax runs over allowed keys only. `dropout` is applied to the attention
// probabilities when rng is non-null and dropout > 0.
Tensor attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                 std::size_t heads, const AttentionMask& mask,
                 double dropout = 0.0, Rng* rng = nullptr);
// Single-head form: [Tq, D] x [Tk, D] x [Tk, D] -> [Tq, D].
Tensor masked_attention(const Tensor& queries, const Tensor& keys,
                        const Tensor& values, const AttentionMask& mask);
// Softmax weights of the single-head form, [Tq, Tk]. No history.
std::vector<double> attention_weights(const Tensor& queries, const Tensor& keys,
                                      const AttentionMask& mask);

// Inverted dropout; identity when rng is null or p == 0.
Tensor dropout(const Tensor& x, double p, Rng* rng);

// Mean over rows of -log softmax(logits)[target]. logits [..., K].
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets);
// Mean absolute error.
Tensor l1_loss(const Tensor& prediction, const Tensor& target);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// Fixed transformer sinusoid table [length, dim].
Tensor sinusoidal_table(std::size_t length, std::size_t dim);

// Numerically stable softmax of a plain vector.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace skilltok
