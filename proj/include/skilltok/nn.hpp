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

#include <cstddef>
#include <string>
#include <vector>

#include "skilltok/ops.hpp"
#include "skilltok/rng.hpp"
#include "skilltok/tensor.hpp"

namespace skilltok {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

// Carries the dropout stream. A null rng means evaluation mode.
struct ForwardContext {
  Rng* rng = nullptr;
  bool training() const { return rng != nullptr; }
};

class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias = true);

  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }
  void collect(const std::string& prefix, ParamList& out) const;

  Tensor weight;  // [in, out]
  Tensor bias;    // [out] or undefined
};

class LayerNorm {
 public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t width);

  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }
  void collect(const std::string& prefix, ParamList& out) const;

  Tensor gamma;
  Tensor beta;
};

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(std::size_t in, std::size_t out, std::size_t kernel_size, std::size_t stride,
         bool causal, Rng& rng);

  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Tensor kernel;  // [K, Cin, Cout]
  Tensor bias;
  std::size_t stride = 1;
  // K-1 for causal layers, (K-1)/2 (centered) otherwise.
  std::size_t pad_left = 0;
};

class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(std::size_t width, std::size_t heads, double dropout, Rng& rng);

  Tensor operator()(const Tensor& x, const Tensor& memory, const AttentionMask& mask,
                    const ForwardContext& ctx) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Linear query, key, value, output;
  std::size_t heads = 1;
  double dropout_p = 0.0;
};

class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(std::size_t width, std::size_t hidden, Rng& rng);

  Tensor operator()(const Tensor& x) const { return down(gelu(up(x))); }
  void collect(const std::string& prefix, ParamList& out) const;

  Linear up, down;
};

// Pre-norm transformer block: self-attention, optional cross-attention,
// feed-forward, each wrapped in a residual connection.
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(std::size_t width, std::size_t heads, std::size_t ffn_hidden,
                   double attn_dropout, bool with_cross_attention, Rng& rng);

  Tensor operator()(const Tensor& x, const AttentionMask& self_mask, const Tensor& memory,
                    const ForwardContext& ctx) const;
  void collect(const std::string& prefix, ParamList& out) const;

  LayerNorm norm_self;
  MultiHeadAttention self_attention;
  bool has_cross = false;
  LayerNorm norm_cross;
  MultiHeadAttention cross_attention;
  LayerNorm norm_ffn;
  FeedForward ffn;
};

// Appends `prefix + index + "."` scoped parameters of each element.
template <typename Layer>
void collect_all(const std::vector<Layer>& layers, const std::string& prefix,
                 ParamList& out) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].collect(prefix + std::to_string(i) + ".", out);
  }
}

std::size_t parameter_count(const ParamList& params);

// Copies values from `source` into same-named tensors of `target`.
// Throws ConfigError on a missing name or shape mismatch.
void load_parameters(const ParamList& target, const ParamList& source);

}  // namespace skilltok
