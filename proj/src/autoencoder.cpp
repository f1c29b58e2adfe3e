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

#include "skilltok/autoencoder.hpp"

#include <algorithm>

#include "skilltok/errors.hpp"

namespace skilltok {

std::size_t EncoderConfig::downsample() const {
  std::size_t f = 1;
  for (std::size_t s : strides) f *= s;
  return f;
}

std::size_t EncoderConfig::num_tokens() const { return seq_len / downsample(); }

void EncoderConfig::validate() const {
  if (kernels.empty() || kernels.size() != strides.size()) {
    throw ConfigError("encoder: need one stride per conv kernel (" +
                      std::to_string(kernels.size()) + " kernels, " +
                      std::to_string(strides.size()) + " strides)");
  }
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (kernels[i] == 0 || strides[i] == 0) {
      throw ConfigError("encoder: kernel sizes and strides must be positive");
    }
  }
  if (seq_len == 0 || action_dim == 0) {
    throw ConfigError("encoder: sequence length and action dim must be positive");
  }
  const std::size_t f = downsample();
  if (seq_len % f != 0) {
    throw ConfigError("encoder: sequence length " + std::to_string(seq_len) +
                      " is not a multiple of the downsampling factor " + std::to_string(f));
  }
  // Every conv must land exactly on T / prod(strides so far).
  std::size_t len = seq_len;
  for (std::size_t s : strides) len = conv_output_length(len, s);
  if (len != seq_len / f) {
    throw ConfigError("encoder: conv stack does not produce T / F positions");
  }
}

SkillAutoencoder::SkillAutoencoder(const EncoderConfig& encoder,
                                   const DecoderConfig& decoder, const FsqSpec& fsq,
                                   std::uint64_t seed)
    : encoder_config_(encoder), decoder_config_(decoder) {
  encoder_config_.validate();
  Rng rng(seed);
  const std::size_t ew = encoder.width;
  const std::size_t dw = decoder.width;
  const std::size_t n = encoder_config_.num_tokens();

  std::size_t in = encoder.action_dim;
  for (std::size_t i = 0; i < encoder.kernels.size(); ++i) {
    convs_.emplace_back(in, ew, encoder.kernels[i], encoder.strides[i], encoder.causal, rng);
    in = ew;
  }
  for (std::size_t i = 0; i < encoder.layers; ++i) {
    encoder_blocks_.emplace_back(ew, encoder.heads, encoder.ffn_mult * ew,
                                 encoder.attn_dropout, false, rng);
  }
  encoder_norm_ = LayerNorm(ew);
  encoder_mask_ = encoder.causal ? AttentionMask::causal(n) : AttentionMask{};

  bottleneck_ = FsqBottleneck(fsq, ew, dw, rng);

  query_table_ = sinusoidal_table(encoder.seq_len, dw);
  {
    std::vector<double> pos(n * dw);
    for (double& v : pos) v = rng.normal(0.0, 0.02);
    token_positions_ = Tensor::from({n, dw}, std::move(pos), true);
  }
  for (std::size_t i = 0; i < decoder.layers; ++i) {
    decoder_blocks_.emplace_back(dw, decoder.heads, decoder.ffn_mult * dw,
                                 decoder.attn_dropout, true, rng);
  }
  decoder_mask_ = decoder.causal_self_attention ? AttentionMask::causal(encoder.seq_len)
                                                : AttentionMask{};
  decoder_norm_ = LayerNorm(dw);
  action_head_ = Linear(dw, encoder.action_dim, rng);
}

Tensor SkillAutoencoder::as_batch(const Tensor& actions) const {
  const std::size_t t = encoder_config_.seq_len;
  const std::size_t a = encoder_config_.action_dim;
  if (actions.rank() == 2 && actions.dim(0) == t && actions.dim(1) == a) {
    return reshape(actions, {1, t, a});
  }
  if (actions.rank() == 3 && actions.dim(1) == t && actions.dim(2) == a) return actions;
  throw DimensionError("autoencoder: expected actions [" + std::to_string(t) + "x" +
                       std::to_string(a) + "] (optionally batched), got " +
                       shape_to_string(actions.shape()));
}

Encoding SkillAutoencoder::encode(const Tensor& actions, const ForwardContext& ctx) const {
  Tensor h = as_batch(actions);
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i](h);
    if (i + 1 < convs_.size()) h = gelu(h);
  }
  for (const auto& block : encoder_blocks_) h = block(h, encoder_mask_, Tensor(), ctx);
  h = encoder_norm_(h);

  Encoding out;
  out.embeddings = bottleneck_.input_projection(h);
  Quantized q = quantize(out.embeddings, bottleneck_.spec());
  out.values = q.values;
  out.indices = std::move(q.indices);
  return out;
}

Tensor SkillAutoencoder::decode(const Tensor& values, const ForwardContext& ctx) const {
  const std::size_t n = num_tokens();
  const std::size_t d = fsq().dim();
  if (values.rank() != 3 || values.dim(1) != n || values.dim(2) != d) {
    throw DimensionError("decode: expected token values [B x " + std::to_string(n) + " x " +
                         std::to_string(d) + "], got " + shape_to_string(values.shape()));
  }
  const std::size_t batch = values.dim(0);
  const std::size_t t = encoder_config_.seq_len;
  const std::size_t w = decoder_config_.width;

  std::vector<double> queries(batch * t * w);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy(query_table_.data().begin(), query_table_.data().end(),
              queries.begin() + b * t * w);
  }
  return decode(values, Tensor::from({batch, t, w}, std::move(queries)), ctx);
}

Tensor SkillAutoencoder::decode(const Tensor& values, const Tensor& queries,
                                const ForwardContext& ctx) const {
  const Shape expected{values.dim(0), encoder_config_.seq_len, decoder_config_.width};
  if (queries.shape() != expected) {
    throw DimensionError("decode: queries must be " + shape_to_string(expected) + ", got " +
                         shape_to_string(queries.shape()));
  }
  Tensor memory = add_broadcast(bottleneck_.project_out(values), token_positions_);
  Tensor h = queries;
  for (const auto& block : decoder_blocks_) h = block(h, decoder_mask_, memory, ctx);
  return action_head_(decoder_norm_(h));
}

Tensor SkillAutoencoder::decode_indices(std::span<const int> indices,
                                        const ForwardContext& ctx) const {
  const std::size_t n = num_tokens();
  if (indices.empty() || indices.size() % n != 0) {
    throw DimensionError("decode_indices: " + std::to_string(indices.size()) +
                         " codes is not a whole number of " + std::to_string(n) +
                         "-token sequences");
  }
  Tensor values = indices_to_values(indices, fsq());
  return decode(reshape(values, {indices.size() / n, n, fsq().dim()}), ctx);
}

Tensor SkillAutoencoder::reconstruct(const Tensor& actions, const ForwardContext& ctx) const {
  return decode(encode(actions, ctx).values, ctx);
}

Tensor SkillAutoencoder::recon_loss(const Tensor& actions, const ForwardContext& ctx) const {
  Tensor target = as_batch(actions);
  return l1_loss(reconstruct(target, ctx), target);
}

ParamList SkillAutoencoder::encoder_parameters() const {
  ParamList out;
  collect_all(convs_, "encoder.conv.", out);
  collect_all(encoder_blocks_, "encoder.block.", out);
  encoder_norm_.collect("encoder.norm.", out);
  bottleneck_.input_projection.collect("fsq.input_projection.", out);
  return out;
}

ParamList SkillAutoencoder::quantizer_output_parameters() const {
  ParamList out;
  bottleneck_.output_projection.collect("fsq.output_projection.", out);
  return out;
}

ParamList SkillAutoencoder::decoder_parameters() const {
  ParamList out;
  out.push_back({"decoder.token_positions", token_positions_});
  collect_all(decoder_blocks_, "decoder.block.", out);
  decoder_norm_.collect("decoder.norm.", out);
  action_head_.collect("decoder.action_head.", out);
  return out;
}

ParamList SkillAutoencoder::parameters() const {
  ParamList out = encoder_parameters();
  for (auto& p : quantizer_output_parameters()) out.push_back(std::move(p));
  for (auto& p : decoder_parameters()) out.push_back(std::move(p));
  return out;
}

SkillAutoencoder SkillAutoencoder::clone() const {
  SkillAutoencoder copy(encoder_config_, decoder_config_, fsq(), 0);
  load_parameters(copy.parameters(), parameters());
  return copy;
}

}  // namespace skilltok
