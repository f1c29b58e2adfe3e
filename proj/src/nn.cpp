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

#include "skilltok/nn.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "skilltok/errors.hpp"

namespace skilltok {
namespace {

constexpr double kInitStd = 0.02;

Tensor normal_param(Shape shape, double stddev, Rng& rng) {
  std::vector<double> data(numel_of(shape));
  for (double& v : data) v = rng.normal(0.0, stddev);
  return Tensor::from(std::move(shape), std::move(data), true);
}

Tensor uniform_param(Shape shape, double bound, Rng& rng) {
  std::vector<double> data(numel_of(shape));
  for (double& v : data) v = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(data), true);
}

}  // namespace

Linear::Linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias)
    : weight(normal_param({in, out}, kInitStd, rng)) {
  if (with_bias) bias = Tensor::zeros({out}, true);
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + "weight", weight});
  if (bias.defined()) out.push_back({prefix + "bias", bias});
}

LayerNorm::LayerNorm(std::size_t width)
    : gamma(Tensor::full({width}, 1.0, true)), beta(Tensor::zeros({width}, true)) {}

void LayerNorm::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + "gamma", gamma});
  out.push_back({prefix + "beta", beta});
}

Conv1d::Conv1d(std::size_t in, std::size_t out, std::size_t kernel_size,
               std::size_t stride_, bool causal, Rng& rng)
    : kernel(uniform_param({kernel_size, in, out},
                           1.0 / std::sqrt(static_cast<double>(kernel_size * in)), rng)),
      bias(Tensor::zeros({out}, true)),
      stride(stride_),
      pad_left(causal ? kernel_size - 1 : (kernel_size - 1) / 2) {}

Tensor Conv1d::operator()(const Tensor& x) const {
  return conv1d(x, kernel, bias, stride, pad_left);
}

void Conv1d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + "kernel", kernel});
  out.push_back({prefix + "bias", bias});
}

MultiHeadAttention::MultiHeadAttention(std::size_t width, std::size_t heads_,
                                       double dropout, Rng& rng)
    : query(width, width, rng),
      key(width, width, rng),
      value(width, width, rng),
      output(width, width, rng),
      heads(heads_),
      dropout_p(dropout) {
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("attention width " + std::to_string(width) +
                      " is not divisible by " + std::to_string(heads) + " heads");
  }
}

Tensor MultiHeadAttention::operator()(const Tensor& x, const Tensor& memory,
                                      const AttentionMask& mask,
                                      const ForwardContext& ctx) const {
  const Tensor& source = memory.defined() ? memory : x;
  Tensor mixed = attention(query(x), key(source), value(source), heads, mask, dropout_p,
                           ctx.rng);
  return output(mixed);
}

void MultiHeadAttention::collect(const std::string& prefix, ParamList& out) const {
  query.collect(prefix + "query.", out);
  key.collect(prefix + "key.", out);
  value.collect(prefix + "value.", out);
  output.collect(prefix + "output.", out);
}

FeedForward::FeedForward(std::size_t width, std::size_t hidden, Rng& rng)
    : up(width, hidden, rng), down(hidden, width, rng) {}

void FeedForward::collect(const std::string& prefix, ParamList& out) const {
  up.collect(prefix + "up.", out);
  down.collect(prefix + "down.", out);
}

TransformerBlock::TransformerBlock(std::size_t width, std::size_t heads,
                                   std::size_t ffn_hidden, double attn_dropout,
                                   bool with_cross_attention, Rng& rng)
    : norm_self(width),
      self_attention(width, heads, attn_dropout, rng),
      has_cross(with_cross_attention),
      norm_ffn(width),
      ffn(width, ffn_hidden, rng) {
  if (has_cross) {
    norm_cross = LayerNorm(width);
    cross_attention = MultiHeadAttention(width, heads, attn_dropout, rng);
  }
}

Tensor TransformerBlock::operator()(const Tensor& x, const AttentionMask& self_mask,
                                    const Tensor& memory,
                                    const ForwardContext& ctx) const {
  Tensor h = x + self_attention(norm_self(x), Tensor(), self_mask, ctx);
  if (has_cross) {
    h = h + cross_attention(norm_cross(h), memory, AttentionMask{}, ctx);
  }
  return h + ffn(norm_ffn(h));
}

void TransformerBlock::collect(const std::string& prefix, ParamList& out) const {
  norm_self.collect(prefix + "norm_self.", out);
  self_attention.collect(prefix + "self_attention.", out);
  if (has_cross) {
    norm_cross.collect(prefix + "norm_cross.", out);
    cross_attention.collect(prefix + "cross_attention.", out);
  }
  norm_ffn.collect(prefix + "norm_ffn.", out);
  ffn.collect(prefix + "ffn.", out);
}

std::size_t parameter_count(const ParamList& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.tensor.numel();
  return n;
}

void load_parameters(const ParamList& target, const ParamList& source) {
  std::unordered_map<std::string, const Tensor*> by_name;
  for (const auto& p : source) by_name[p.name] = &p.tensor;
  for (const auto& p : target) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw ConfigError("missing parameter '" + p.name + "'");
    const Tensor& src = *it->second;
    if (src.shape() != p.tensor.shape()) {
      throw ConfigError("parameter '" + p.name + "' has shape " +
                        shape_to_string(src.shape()) + ", expected " +
                        shape_to_string(p.tensor.shape()));
    }
    Tensor dst = p.tensor;
    std::copy(src.data().begin(), src.data().end(), dst.mutable_data().begin());
  }
}

}  // namespace skilltok
