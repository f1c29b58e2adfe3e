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

// Every tunable of a run as "key = value" text. Blank lines and lines
// starting with '#' are ignored; unknown keys are an error.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "skilltok/autoencoder.hpp"
#include "skilltok/controller.hpp"
#include "skilltok/prior.hpp"
#include "skilltok/training.hpp"

namespace skilltok {

struct RunConfig {
  std::uint64_t seed = 0;

  // Skill autoencoder.
  std::size_t window = 32;
  std::vector<std::size_t> fsq_levels{8, 5, 5, 5};
  std::vector<std::size_t> encoder_kernels{5, 3, 3};
  std::vector<std::size_t> encoder_strides{2, 2, 1};
  std::size_t encoder_width = 256;
  std::size_t encoder_layers = 2;
  std::size_t encoder_heads = 4;
  double encoder_dropout = 0.1;
  bool encoder_causal = true;
  std::size_t decoder_width = 256;
  std::size_t decoder_layers = 4;
  std::size_t decoder_heads = 4;
  double decoder_dropout = 0.1;
  bool decoder_causal = true;
  std::size_t ffn_mult = 4;

  // Skill prior.
  std::size_t prior_width = 384;
  std::size_t prior_layers = 6;
  std::size_t prior_heads = 6;
  double prior_attn_dropout = 0.1;
  double prior_embed_dropout = 0.1;
  std::size_t obs_history = 1;
  std::size_t prior_obs_hidden = 0;

  // Sampling and control.
  std::size_t top_k = 5;
  double temperature = 1.0;
  std::size_t execution_horizon = 8;
  std::size_t max_episode_steps = 200;

  // Few-shot finetuning.
  bool decoder_finetune = true;
  double decoder_loss_scale = 10.0;

  // Optimization (shared by all stages unless noted).
  double learning_rate = 1e-4;
  std::size_t batch_size = 64;
  double grad_clip = 1.0;
  bool cosine_decay = false;
  std::size_t stage1_epochs = 10;
  std::size_t stage1_steps_per_epoch = 0;  // 0 = one full pass
  std::size_t stage2_epochs = 10;
  std::size_t stage2_steps_per_epoch = 0;
  std::size_t finetune_epochs = 50;
  std::size_t finetune_steps_per_epoch = 0;

  // Data and evaluation.
  std::size_t demos_per_task = 50;
  std::size_t fewshot_demos = 5;
  std::size_t eval_episodes = 20;

  EncoderConfig encoder_config() const;
  DecoderConfig decoder_config() const;
  FsqSpec fsq_spec() const;
  PriorConfig prior_config(std::size_t num_tasks) const;
  SamplerConfig sampler_config() const;
  ControlConfig control_config() const;
  TrainConfig stage1_train() const;
  TrainConfig stage2_train() const;
  FinetuneConfig finetune_config() const;

  // Canonical "key = value" text for every key, in registry order.
  std::string to_text() const;
  // Applies one assignment; ConfigError on unknown key or bad value.
  void set(std::string_view key, std::string_view value);
  // Value of one key as it would appear in to_text().
  std::string get(std::string_view key) const;
};

struct ConfigKey {
  std::string name;
  std::string doc;
};

// All keys with one-line descriptions.
const std::vector<ConfigKey>& config_keys();

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

}  // namespace skilltok
