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

#include "skilltok/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skilltok/errors.hpp"

namespace skilltok {
namespace {

Tensor normal_table(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> data(rows * cols);
  for (double& v : data) v = rng.normal(0.0, 0.02);
  return Tensor::from({rows, cols}, std::move(data), true);
}

}  // namespace

void PriorConfig::validate() const {
  if (vocab_size == 0 || block_size == 0 || obs_history == 0 || obs_dim == 0 ||
      num_tasks == 0 || width == 0) {
    throw ConfigError("prior: sizes must be positive");
  }
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("prior: width " + std::to_string(width) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
}

SkillPrior::SkillPrior(const PriorConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng(seed);
  const std::size_t w = config.width;
  task_table_ = normal_table(config.num_tasks, w, rng);
  const std::size_t hidden = config.obs_hidden ? config.obs_hidden : w;
  obs_in_ = Linear(config.obs_dim, hidden, rng);
  obs_out_ = Linear(hidden, w, rng);
  token_table_ = normal_table(config.vocab_size + 1, w, rng);
  skill_positions_ = sinusoidal_table(config.block_size, w);
  for (std::size_t i = 0; i < config.layers; ++i) {
    blocks_.emplace_back(w, config.heads, config.ffn_mult * w, config.attn_dropout, false,
                         rng);
  }
  norm_ = LayerNorm(w);
  head_ = Linear(w, config.vocab_size, rng);
}

Tensor SkillPrior::observation_token(const Tensor& observations) const {
  if (observations.shape().back() != config_.obs_dim) {
    throw DimensionError("observation width " + std::to_string(observations.shape().back()) +
                         " != configured " + std::to_string(config_.obs_dim));
  }
  return obs_out_(gelu(obs_in_(observations)));
}

Tensor SkillPrior::logits(const PriorInput& input, const ForwardContext& ctx) const {
  const std::size_t batch = input.batch();
  const std::size_t h = config_.obs_history;
  const std::size_t w = config_.width;
  const std::size_t m = input.prefix_len;
  if (batch == 0) throw ArgumentError("prior: empty batch");
  if (m + 1 > config_.block_size) {
    throw ConfigError("prior: context with " + std::to_string(m) +
                      " skill tokens exceeds the maximum length " +
                      std::to_string(config_.context_length()));
  }
  if (input.observations.size() != batch * h * config_.obs_dim) {
    throw DimensionError("prior: expected " + std::to_string(batch * h * config_.obs_dim) +
                         " observation values, got " +
                         std::to_string(input.observations.size()));
  }
  if (input.tokens.size() != batch * m) {
    throw DimensionError("prior: expected " + std::to_string(batch * m) + " prefix tokens");
  }
  for (int id : input.task_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= num_tasks()) {
      throw RangeError("prior: unknown task id " + std::to_string(id));
    }
  }

  Tensor task = reshape(embedding(task_table_, input.task_ids), {batch, 1, w});
  Tensor obs = observation_token(
      Tensor::from({batch, h, config_.obs_dim}, input.observations));

  std::vector<int> skill_ids;
  skill_ids.reserve(batch * (m + 1));
  for (std::size_t b = 0; b < batch; ++b) {
    skill_ids.push_back(config_.start_token());
    for (std::size_t i = 0; i < m; ++i) {
      const int t = input.tokens[b * m + i];
      if (t < 0 || static_cast<std::size_t>(t) >= config_.vocab_size) {
        throw RangeError("prior: skill token " + std::to_string(t) + " out of range");
      }
      skill_ids.push_back(t);
    }
  }
  Tensor skills = reshape(embedding(token_table_, skill_ids), {batch, m + 1, w});
  skills = add_broadcast(skills, slice_seq(skill_positions_, 0, m + 1));

  Tensor x = concat_seq({task, obs, skills});
  x = dropout(x, config_.embed_dropout, ctx.rng);
  const AttentionMask mask = AttentionMask::causal(1 + h + m + 1);
  for (const auto& block : blocks_) x = block(x, mask, Tensor(), ctx);
  x = slice_seq(norm_(x), 1 + h, m + 1);
  return head_(x);
}

Tensor SkillPrior::nll_loss(const PriorInput& context, std::span<const int> targets,
                            const ForwardContext& ctx) const {
  const std::size_t n = config_.block_size;
  const std::size_t batch = context.batch();
  if (targets.size() != batch * n) {
    throw DimensionError("nll_loss: expected " + std::to_string(batch * n) + " targets");
  }
  for (int t : targets) {
    if (t < 0 || static_cast<std::size_t>(t) >= config_.vocab_size) {
      throw RangeError("nll_loss: target " + std::to_string(t) + " outside [0, " +
                       std::to_string(config_.vocab_size) + ")");
    }
  }
  PriorInput input = context;
  input.prefix_len = n - 1;
  input.tokens.clear();
  for (std::size_t b = 0; b < batch; ++b) {
    input.tokens.insert(input.tokens.end(), targets.begin() + b * n,
                        targets.begin() + b * n + n - 1);
  }
  return cross_entropy(logits(input, ctx), targets);
}

std::vector<int> SkillPrior::sample(int task_id, std::span<const double> observations,
                                    const SamplerConfig& sampler, Rng& rng) const {
  PriorInput input;
  input.task_ids = {task_id};
  input.observations.assign(observations.begin(), observations.end());
  return sample_batch(input, sampler, rng);
}

std::vector<int> SkillPrior::sample_batch(const PriorInput& contexts,
                                          const SamplerConfig& sampler, Rng& rng) const {
  NoGradGuard no_grad;
  const std::size_t v = config_.vocab_size;
  const std::size_t n = config_.block_size;
  const std::size_t batch = contexts.batch();
  PriorInput input = contexts;
  std::vector<int> out(batch * n);
  for (std::size_t i = 0; i < n; ++i) {
    input.prefix_len = i;
    input.tokens.resize(batch * i);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t j = 0; j < i; ++j) input.tokens[b * i + j] = out[b * n + j];
    }
    const Tensor l = logits(input);
    for (std::size_t b = 0; b < batch; ++b) {
      out[b * n + i] = sample_top_k(l.data().subspan((b * (i + 1) + i) * v, v), sampler, rng);
    }
  }
  return out;
}

int SkillPrior::append_task(Rng& rng) {
  const std::size_t rows = num_tasks();
  const std::size_t w = config_.width;
  std::vector<double> data(task_table_.data().begin(), task_table_.data().end());
  for (std::size_t i = 0; i < w; ++i) data.push_back(rng.normal(0.0, 0.02));
  task_table_ = Tensor::from({rows + 1, w}, std::move(data), true);
  config_.num_tasks = rows + 1;
  return static_cast<int>(rows);
}

ParamList SkillPrior::parameters() const {
  ParamList out;
  out.push_back({"prior.task_embedding", task_table_});
  obs_in_.collect("prior.obs_encoder.in.", out);
  obs_out_.collect("prior.obs_encoder.out.", out);
  out.push_back({"prior.token_embedding", token_table_});
  collect_all(blocks_, "prior.block.", out);
  norm_.collect("prior.norm.", out);
  head_.collect("prior.head.", out);
  return out;
}

SkillPrior SkillPrior::clone() const {
  SkillPrior copy(config_, 0);
  load_parameters(copy.parameters(), parameters());
  return copy;
}

std::vector<int> top_k_indices(std::span<const double> logits, std::size_t k) {
  std::vector<int> idx(logits.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(k), idx.end(),
                    [&](int a, int b) {
                      return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

int sample_top_k(std::span<const double> logits, const SamplerConfig& sampler, Rng& rng) {
  if (sampler.top_k == 0 || sampler.top_k > logits.size()) {
    throw ArgumentError("sampler: top_k must be in [1, " + std::to_string(logits.size()) +
                        "], got " + std::to_string(sampler.top_k));
  }
  if (!(sampler.temperature > 0.0)) {
    throw ArgumentError("sampler: temperature must be positive");
  }
  const std::vector<int> keep = top_k_indices(logits, sampler.top_k);
  if (keep.size() == 1) return keep.front();
  std::vector<double> scaled(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    scaled[i] = logits[keep[i]] / sampler.temperature;
  }
  const std::vector<double> p = softmax(scaled);
  double u = rng.uniform();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (u < p[i]) return keep[i];
    u -= p[i];
  }
  return keep.back();
}

}  // namespace skilltok
