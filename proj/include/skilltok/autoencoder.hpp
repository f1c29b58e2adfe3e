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

// Stage-1 model: compresses a T-step action chunk into n = T / F skill tokens
// and reconstructs the chunk from those tokens alone.
//
//   encoder: strided causal convs (T -> n) -> causally masked self-attention
//            -> FSQ input projection -> bound -> round
//   decoder: fixed sinusoidal queries [T] attend (masked self-attention) and
//            cross-attend to the projected tokens [n] -> linear head -> actions
//
// With the causal layout, token j only sees actions at indices <= j * F.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "skilltok/fsq.hpp"
#include "skilltok/nn.hpp"

namespace skilltok {

struct EncoderConfig {
  std::size_t seq_len = 32;
  std::size_t action_dim = 2;
  std::vector<std::size_t> kernels{5, 3, 3};
  std::vector<std::size_t> strides{2, 2, 1};
  std::size_t width = 256;
  std::size_t layers = 2;
  std::size_t heads = 4;
  double attn_dropout = 0.1;
  bool causal = true;
  std::size_t ffn_mult = 4;

  std::size_t downsample() const;
  std::size_t num_tokens() const;
  // Throws ConfigError for inconsistent settings (T not divisible by F, ...).
  void validate() const;
};

struct DecoderConfig {
  std::size_t width = 256;
  std::size_t layers = 4;
  std::size_t heads = 4;
  double attn_dropout = 0.1;
  bool causal_self_attention = true;
  std::size_t ffn_mult = 4;
};

struct Encoding {
  Tensor embeddings;         // pre-quantization, [B, n, d]
  Tensor values;             // rounded grid values (straight-through), [B, n, d]
  std::vector<int> indices;  // flat codes, row-major [B, n]
};

class SkillAutoencoder {
 public:
  SkillAutoencoder(const EncoderConfig& encoder, const DecoderConfig& decoder,
                   const FsqSpec& fsq, std::uint64_t seed);

  // actions: [T, A] or [B, T, A]. Output is always batched.
  Encoding encode(const Tensor& actions, const ForwardContext& ctx = {}) const;
  // values: [B, n, d] grid values -> [B, T, A].
  Tensor decode(const Tensor& values, const ForwardContext& ctx = {}) const;
  // Same with an explicit query stream [B, T, W] in place of the sinusoid
  // table. For probing the decoder's self-attention mask.
  Tensor decode(const Tensor& values, const Tensor& queries,
                const ForwardContext& ctx = {}) const;
  // indices: [batch * n] flat codes.
  Tensor decode_indices(std::span<const int> indices, const ForwardContext& ctx = {}) const;
  Tensor reconstruct(const Tensor& actions, const ForwardContext& ctx = {}) const;
  // Mean |decode(quantize(encode(a))) - a| over all elements.
  Tensor recon_loss(const Tensor& actions, const ForwardContext& ctx = {}) const;

  // Convs, encoder blocks, encoder norm and the FSQ input projection.
  ParamList encoder_parameters() const;
  // FSQ output projection.
  ParamList quantizer_output_parameters() const;
  // Decoder blocks, token positions, final norm and action head.
  ParamList decoder_parameters() const;
  ParamList parameters() const;
  // Independent copy: same configuration, parameter storage not shared.
  SkillAutoencoder clone() const;

  const EncoderConfig& encoder_config() const { return encoder_config_; }
  const DecoderConfig& decoder_config() const { return decoder_config_; }
  const FsqSpec& fsq() const { return bottleneck_.spec(); }
  std::size_t num_tokens() const { return encoder_config_.num_tokens(); }
  std::size_t seq_len() const { return encoder_config_.seq_len; }
  std::size_t action_dim() const { return encoder_config_.action_dim; }

 private:
  Tensor as_batch(const Tensor& actions) const;

  EncoderConfig encoder_config_;
  DecoderConfig decoder_config_;

  std::vector<Conv1d> convs_;
  std::vector<TransformerBlock> encoder_blocks_;
  LayerNorm encoder_norm_;
  AttentionMask encoder_mask_;

  FsqBottleneck bottleneck_;

  Tensor query_table_;      // fixed sinusoid, [T, W]
  Tensor token_positions_;  // learned, [n, W]
  std::vector<TransformerBlock> decoder_blocks_;
  AttentionMask decoder_mask_;
  LayerNorm decoder_norm_;
  Linear action_head_;
};

}  // namespace skilltok
