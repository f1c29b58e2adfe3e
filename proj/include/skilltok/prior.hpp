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

// Stage-2 model: a decoder-only transformer over the sequence
//
//   [task embedding, obs token x h, <s>, z1, ..., z(n-1)]
//
// with a causal mask over the whole sequence. Only the skill segment
// (<s> and z) gets sinusoidal positions. The logits read at <s> predict z1,
// the logits read at z(i) predict z(i+1).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "skilltok/nn.hpp"

namespace skilltok {

struct PriorConfig {
  std::size_t vocab_size = 1000;
  std::size_t width = 384;
  std::size_t layers = 6;
  std::size_t heads = 6;
  double attn_dropout = 0.1;
  double embed_dropout = 0.1;
  std::size_t block_size = 8;  // n skill tokens per chunk
  std::size_t obs_history = 1;
  std::size_t obs_dim = 4;
  std::size_t num_tasks = 8;
  std::size_t ffn_mult = 4;
  std::size_t obs_hidden = 0;  // observation MLP hidden width, 0 = width

  int start_token() const { return static_cast<int>(vocab_size); }
  std::size_t context_length() const { return 1 + obs_history + block_size; }
  void validate() const;
};

// One batch of contexts. observations holds B * obs_history * obs_dim values,
// oldest first within each context; tokens holds B * prefix_len skill codes.
struct PriorInput {
  std::vector<int> task_ids;
  std::vector<double> observations;
  std::vector<int> tokens;
  std::size_t prefix_len = 0;

  std::size_t batch() const { return task_ids.size(); }
};

struct SamplerConfig {
  std::size_t top_k = 5;
  double temperature = 1.0;
};

class SkillPrior {
 public:
  SkillPrior(const PriorConfig& config, std::uint64_t seed);

  // [B, prefix_len + 1, vocab]: row i predicts skill token i+1.
  Tensor logits(const PriorInput& input, const ForwardContext& ctx = {}) const;
  // Mean over batch and the n positions of -log p(target). targets: B * n.
  Tensor nll_loss(const PriorInput& context, std::span<const int> targets,
                  const ForwardContext& ctx = {}) const;
  // Observation encoder alone: [..., obs_dim] -> [..., width].
  Tensor observation_token(const Tensor& observations) const;

  // Autoregressive top-k / temperature sampling of n tokens for one context.
  // observations: obs_history * obs_dim values.
  std::vector<int> sample(int task_id, std::span<const double> observations,
                          const SamplerConfig& sampler, Rng& rng) const;
  // Same for every context in `contexts` (tokens/prefix_len ignored);
  // returns batch * n tokens. Draws are made context by context per position.
  std::vector<int> sample_batch(const PriorInput& contexts, const SamplerConfig& sampler,
                                Rng& rng) const;

  // Adds a freshly initialized task-embedding row; returns its id.
  int append_task(Rng& rng);
  std::size_t num_tasks() const { return task_table_.dim(0); }

  ParamList parameters() const;
  SkillPrior clone() const;
  const PriorConfig& config() const { return config_; }

 private:
  PriorConfig config_;
  Tensor task_table_;   // [tasks, W]
  Linear obs_in_;       // obs_dim -> hidden
  Linear obs_out_;      // hidden -> W
  Tensor token_table_;  // [vocab + 1, W], last row is <s>
  Tensor skill_positions_;  // fixed sinusoid [n, W]
  std::vector<TransformerBlock> blocks_;
  LayerNorm norm_;
  Linear head_;
};

// Indices of the k largest logits (ties broken toward the lower index).
std::vector<int> top_k_indices(std::span<const double> logits, std::size_t k);

// Draws one index from softmax(logits[top-k] / temperature).
int sample_top_k(std::span<const double> logits, const SamplerConfig& sampler, Rng& rng);

}  // namespace skilltok
