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

// Training loops for both stages and few-shot adaptation.

#include <cstdint>
#include <vector>

#include "skilltok/autoencoder.hpp"
#include "skilltok/metrics.hpp"
#include "skilltok/prior.hpp"
#include "skilltok/tasks.hpp"

namespace skilltok {

struct TrainConfig {
  std::size_t epochs = 1;
  // 0 = one pass over the data per epoch (floor(N / batch), at least 1).
  std::size_t steps_per_epoch = 0;
  std::size_t batch_size = 64;
  double learning_rate = 1e-4;
  double grad_clip = 1.0;
  // Cosine decay from learning_rate to 0 over all epochs * steps.
  bool cosine_decay = false;
};

// Stride-1 action windows, row-major [count, window, act_dim].
struct ActionWindows {
  std::size_t window = 0;
  std::size_t act_dim = 0;
  std::vector<double> values;

  std::size_t count() const { return window ? values.size() / (window * act_dim) : 0; }
  Tensor gather(std::span<const std::size_t> rows) const;
};

ActionWindows extract_action_windows(const TrajectoryDataset& data, std::size_t window);

// Stage 1 only ever sees actions.
SkillAutoencoder train_stage1(const ActionWindows& windows, const EncoderConfig& encoder,
                              const DecoderConfig& decoder, const FsqSpec& fsq,
                              const TrainConfig& train, std::uint64_t seed,
                              const MetricsSink& sink = {});

// Mean l1 reconstruction error in evaluation mode.
double reconstruction_error(const SkillAutoencoder& model, const ActionWindows& windows);
// Codes emitted for every window, [count * n].
std::vector<int> encode_windows(const SkillAutoencoder& model, const ActionWindows& windows);

// One stage-2 example per window: context at the window start and the
// frozen encoder's tokens for the window's actions.
struct PriorExamples {
  std::size_t obs_history = 1;
  std::size_t obs_dim = 0;
  std::size_t block_size = 0;
  std::size_t window = 0;
  std::size_t act_dim = 0;
  std::vector<int> task_ids;
  std::vector<double> observations;  // [count, obs_history, obs_dim]
  std::vector<int> targets;          // [count, block_size]
  std::vector<double> actions;       // [count, window, act_dim]

  std::size_t count() const { return task_ids.size(); }
  PriorInput context(std::span<const std::size_t> rows) const;
};

// History shorter than obs_history at an episode start repeats the first
// observation.
PriorExamples build_prior_examples(const TrajectoryDataset& data,
                                   const SkillAutoencoder& stage1, std::size_t obs_history);

// The autoencoder is read only; its FSQ codebook and token count must match
// the prior's vocabulary and block size (ConfigError otherwise).
SkillPrior train_stage2(const TrajectoryDataset& data, const SkillAutoencoder& stage1,
                        const PriorConfig& prior, const TrainConfig& train,
                        std::uint64_t seed, const MetricsSink& sink = {});
SkillPrior train_prior(const PriorExamples& examples, const PriorConfig& prior,
                       const TrainConfig& train, std::uint64_t seed,
                       const MetricsSink& sink = {});

// Mean NLL over all examples in evaluation mode.
double prior_nll(const SkillPrior& prior, const PriorExamples& examples);

struct FinetuneConfig {
  TrainConfig train;
  bool decoder_finetune = true;
  double loss_scale = 10.0;
  SamplerConfig sampler;
};

struct FinetuneResult {
  SkillAutoencoder autoencoder;
  SkillPrior prior;
};

// Adapts copies of the pretrained models to `demos`. The encoder and the FSQ
// projections never change. Task ids beyond the prior's table get new rows.
// With decoder finetuning on, the loss adds
//   loss_scale * l1(decode(Z), a),  Z ~ prior (sampled, no gradient path).
FinetuneResult finetune_fewshot(const SkillAutoencoder& stage1, const SkillPrior& stage2,
                                const TrajectoryDataset& demos, const FinetuneConfig& config,
                                std::uint64_t seed, const MetricsSink& sink = {});

}  // namespace skilltok
