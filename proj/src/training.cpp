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

#include "skilltok/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "skilltok/adam.hpp"
#include "skilltok/errors.hpp"

namespace skilltok {
namespace {

// Stream ids for Rng::derive, one per consumer.
enum Stream : std::uint64_t {
  kStage1 = 1,
  kStage2 = 2,
  kFinetune = 3,
  kInit = 10,
  kShuffle = 11,
  kDropout = 12,
  kSampling = 13,
  kNewTask = 14,
};

// Endless shuffled passes over [0, n) in fixed-size batches.
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::size_t batch, Rng rng)
      : order_(n), batch_(std::min(batch, n)), rng_(std::move(rng)) {
    std::iota(order_.begin(), order_.end(), 0);
    reshuffle();
  }

  std::vector<std::size_t> next() {
    if (pos_ + batch_ > order_.size()) reshuffle();
    std::vector<std::size_t> out(order_.begin() + static_cast<long>(pos_),
                                 order_.begin() + static_cast<long>(pos_ + batch_));
    pos_ += batch_;
    return out;
  }

  std::size_t steps_per_pass() const { return std::max<std::size_t>(1, order_.size() / batch_); }

 private:
  void reshuffle() {
    // Fisher-Yates with our own draws so the order does not depend on the
    // standard library's shuffle.
    for (std::size_t i = order_.size(); i > 1; --i) {
      std::swap(order_[i - 1], order_[rng_.below(i)]);
    }
    pos_ = 0;
  }

  std::vector<std::size_t> order_;
  std::size_t batch_;
  Rng rng_;
  std::size_t pos_ = 0;
};

AdamConfig adam_config(const TrainConfig& train) {
  AdamConfig c;
  c.learning_rate = train.learning_rate;
  c.grad_clip = train.grad_clip;
  return c;
}

void check_train_config(const TrainConfig& train) {
  if (train.batch_size == 0) throw ConfigError("batch size must be positive");
  if (!(train.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

std::size_t steps_for(const TrainConfig& train, const BatchSampler& sampler) {
  return train.steps_per_epoch ? train.steps_per_epoch : sampler.steps_per_pass();
}

// Learning rate for global step `step` (0-based) of `total`.
double scheduled_rate(const TrainConfig& train, std::size_t step, std::size_t total) {
  if (!train.cosine_decay || total == 0) return train.learning_rate;
  const double f = static_cast<double>(step) / static_cast<double>(total);
  return train.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * f));
}

void emit(const MetricsSink& sink, MetricsRecord record) {
  if (sink) sink(record);
}

}  // namespace

Tensor ActionWindows::gather(std::span<const std::size_t> rows) const {
  const std::size_t stride = window * act_dim;
  std::vector<double> out;
  out.reserve(rows.size() * stride);
  for (std::size_t r : rows) {
    if (r >= count()) throw RangeError("window " + std::to_string(r) + " out of range");
    out.insert(out.end(), values.begin() + static_cast<long>(r * stride),
               values.begin() + static_cast<long>((r + 1) * stride));
  }
  return Tensor::from({rows.size(), window, act_dim}, std::move(out));
}

ActionWindows extract_action_windows(const TrajectoryDataset& data, std::size_t window) {
  if (window == 0) throw ConfigError("window length must be positive");
  ActionWindows w;
  w.window = window;
  w.act_dim = data.act_dim;
  w.values.reserve(data.window_count(window) * window * data.act_dim);
  for (const auto& e : data.episodes) {
    const std::size_t len = e.length(data.act_dim);
    for (std::size_t t = 0; t + window <= len; ++t) {
      w.values.insert(w.values.end(), e.actions.begin() + static_cast<long>(t * data.act_dim),
                      e.actions.begin() + static_cast<long>((t + window) * data.act_dim));
    }
  }
  return w;
}

SkillAutoencoder train_stage1(const ActionWindows& windows, const EncoderConfig& encoder,
                              const DecoderConfig& decoder, const FsqSpec& fsq,
                              const TrainConfig& train, std::uint64_t seed,
                              const MetricsSink& sink) {
  check_train_config(train);
  if (windows.count() == 0) throw ArgumentError("train_stage1: no training windows");
  if (windows.window != encoder.seq_len || windows.act_dim != encoder.action_dim) {
    throw ConfigError("train_stage1: windows are " + std::to_string(windows.window) + "x" +
                      std::to_string(windows.act_dim) + ", encoder expects " +
                      std::to_string(encoder.seq_len) + "x" +
                      std::to_string(encoder.action_dim));
  }
  SkillAutoencoder model(encoder, decoder, fsq,
                         Rng::derive(seed, {kStage1, kInit}).next_u64());
  Adam opt(model.parameters(), adam_config(train));
  BatchSampler batches(windows.count(), train.batch_size, Rng::derive(seed, {kStage1, kShuffle}));
  Rng dropout_rng = Rng::derive(seed, {kStage1, kDropout});
  const ForwardContext ctx{&dropout_rng};
  const std::size_t steps = steps_for(train, batches);

  for (std::size_t epoch = 1; epoch <= train.epochs; ++epoch) {
    double total = 0.0;
    std::vector<int> codes;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto rows = batches.next();
      const Tensor x = windows.gather(rows);
      opt.set_learning_rate(scheduled_rate(train, (epoch - 1) * steps + s, train.epochs * steps));
      opt.zero_grad();
      Encoding enc = model.encode(x, ctx);
      Tensor loss = l1_loss(model.decode(enc.values, ctx), x);
      loss.backward();
      opt.step();
      total += loss.item();
      codes.insert(codes.end(), enc.indices.begin(), enc.indices.end());
    }
    MetricsRecord r;
    r.phase = "stage1";
    r.epoch = epoch;
    r.loss = total / static_cast<double>(steps);
    r.codebook_utilization = utilization(codes, fsq);
    r.seed = seed;
    emit(sink, r);
  }
  return model;
}

double reconstruction_error(const SkillAutoencoder& model, const ActionWindows& windows) {
  if (windows.count() == 0) throw ArgumentError("reconstruction_error: no windows");
  NoGradGuard no_grad;
  constexpr std::size_t kChunk = 256;
  double total = 0.0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < windows.count(); start += kChunk) {
    rows.clear();
    for (std::size_t r = start; r < std::min(start + kChunk, windows.count()); ++r) {
      rows.push_back(r);
    }
    total += model.recon_loss(windows.gather(rows)).item() * static_cast<double>(rows.size());
  }
  return total / static_cast<double>(windows.count());
}

std::vector<int> encode_windows(const SkillAutoencoder& model, const ActionWindows& windows) {
  NoGradGuard no_grad;
  constexpr std::size_t kChunk = 256;
  std::vector<int> codes;
  codes.reserve(windows.count() * model.num_tokens());
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < windows.count(); start += kChunk) {
    rows.clear();
    for (std::size_t r = start; r < std::min(start + kChunk, windows.count()); ++r) {
      rows.push_back(r);
    }
    const Encoding enc = model.encode(windows.gather(rows));
    codes.insert(codes.end(), enc.indices.begin(), enc.indices.end());
  }
  return codes;
}

PriorInput PriorExamples::context(std::span<const std::size_t> rows) const {
  PriorInput in;
  const std::size_t stride = obs_history * obs_dim;
  for (std::size_t r : rows) {
    in.task_ids.push_back(task_ids.at(r));
    in.observations.insert(in.observations.end(),
                           observations.begin() + static_cast<long>(r * stride),
                           observations.begin() + static_cast<long>((r + 1) * stride));
  }
  return in;
}

PriorExamples build_prior_examples(const TrajectoryDataset& data,
                                   const SkillAutoencoder& stage1, std::size_t obs_history) {
  if (obs_history == 0) throw ConfigError("observation history must be at least 1");
  if (data.act_dim != stage1.action_dim()) {
    throw ConfigError("dataset action dim " + std::to_string(data.act_dim) +
                      " does not match the autoencoder's " +
                      std::to_string(stage1.action_dim()));
  }
  PriorExamples ex;
  ex.obs_history = obs_history;
  ex.obs_dim = data.obs_dim;
  ex.block_size = stage1.num_tokens();
  ex.window = stage1.seq_len();
  ex.act_dim = data.act_dim;
  const std::size_t t_len = ex.window;
  for (const auto& e : data.episodes) {
    const std::size_t len = e.length(data.act_dim);
    for (std::size_t t = 0; t + t_len <= len; ++t) {
      ex.task_ids.push_back(e.task_id);
      for (std::size_t k = 0; k < obs_history; ++k) {
        // Oldest first; indices before the episode start repeat step 0.
        const std::size_t back = obs_history - 1 - k;
        const std::size_t src = t >= back ? t - back : 0;
        ex.observations.insert(ex.observations.end(),
                               e.observations.begin() + static_cast<long>(src * data.obs_dim),
                               e.observations.begin() +
                                   static_cast<long>((src + 1) * data.obs_dim));
      }
      ex.actions.insert(ex.actions.end(),
                        e.actions.begin() + static_cast<long>(t * data.act_dim),
                        e.actions.begin() + static_cast<long>((t + t_len) * data.act_dim));
    }
  }
  ActionWindows w;
  w.window = t_len;
  w.act_dim = data.act_dim;
  w.values = ex.actions;
  if (w.count() > 0) ex.targets = encode_windows(stage1, w);
  return ex;
}

SkillPrior train_stage2(const TrajectoryDataset& data, const SkillAutoencoder& stage1,
                        const PriorConfig& prior, const TrainConfig& train,
                        std::uint64_t seed, const MetricsSink& sink) {
  if (prior.vocab_size != stage1.fsq().codebook_size()) {
    throw ConfigError("prior vocabulary " + std::to_string(prior.vocab_size) +
                      " does not match the stage-1 codebook size " +
                      std::to_string(stage1.fsq().codebook_size()));
  }
  if (prior.block_size != stage1.num_tokens()) {
    throw ConfigError("prior block size " + std::to_string(prior.block_size) +
                      " does not match the stage-1 token count " +
                      std::to_string(stage1.num_tokens()));
  }
  if (prior.obs_dim != data.obs_dim) {
    throw ConfigError("prior observation dim " + std::to_string(prior.obs_dim) +
                      " does not match the dataset's " + std::to_string(data.obs_dim));
  }
  return train_prior(build_prior_examples(data, stage1, prior.obs_history), prior, train, seed,
                     sink);
}

SkillPrior train_prior(const PriorExamples& examples, const PriorConfig& prior,
                       const TrainConfig& train, std::uint64_t seed, const MetricsSink& sink) {
  check_train_config(train);
  if (examples.count() == 0) throw ArgumentError("train_stage2: no training windows");
  for (int id : examples.task_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= prior.num_tasks) {
      throw ConfigError("task id " + std::to_string(id) + " outside the prior's " +
                        std::to_string(prior.num_tasks) + " task embeddings");
    }
  }
  SkillPrior model(prior, Rng::derive(seed, {kStage2, kInit}).next_u64());
  Adam opt(model.parameters(), adam_config(train));
  BatchSampler batches(examples.count(), train.batch_size,
                       Rng::derive(seed, {kStage2, kShuffle}));
  Rng dropout_rng = Rng::derive(seed, {kStage2, kDropout});
  const ForwardContext ctx{&dropout_rng};
  const std::size_t steps = steps_for(train, batches);
  const std::size_t n = examples.block_size;

  for (std::size_t epoch = 1; epoch <= train.epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto rows = batches.next();
      std::vector<int> targets;
      for (std::size_t r : rows) {
        targets.insert(targets.end(), examples.targets.begin() + static_cast<long>(r * n),
                       examples.targets.begin() + static_cast<long>((r + 1) * n));
      }
      opt.set_learning_rate(scheduled_rate(train, (epoch - 1) * steps + s, train.epochs * steps));
      opt.zero_grad();
      Tensor loss = model.nll_loss(examples.context(rows), targets, ctx);
      loss.backward();
      opt.step();
      total += loss.item();
    }
    MetricsRecord r;
    r.phase = "stage2";
    r.epoch = epoch;
    r.loss = total / static_cast<double>(steps);
    r.seed = seed;
    emit(sink, r);
  }
  return model;
}

double prior_nll(const SkillPrior& prior, const PriorExamples& examples) {
  if (examples.count() == 0) throw ArgumentError("prior_nll: no examples");
  NoGradGuard no_grad;
  constexpr std::size_t kChunk = 256;
  const std::size_t n = examples.block_size;
  double total = 0.0;
  for (std::size_t start = 0; start < examples.count(); start += kChunk) {
    std::vector<std::size_t> rows;
    for (std::size_t r = start; r < std::min(start + kChunk, examples.count()); ++r) {
      rows.push_back(r);
    }
    const std::span<const int> targets(examples.targets.data() + start * n, rows.size() * n);
    total += prior.nll_loss(examples.context(rows), targets).item() *
             static_cast<double>(rows.size());
  }
  return total / static_cast<double>(examples.count());
}

FinetuneResult finetune_fewshot(const SkillAutoencoder& stage1, const SkillPrior& stage2,
                                const TrajectoryDataset& demos, const FinetuneConfig& config,
                                std::uint64_t seed, const MetricsSink& sink) {
  check_train_config(config.train);
  if (demos.episodes.empty()) throw ArgumentError("finetune: no demonstrations");
  FinetuneResult out{stage1.clone(), stage2.clone()};
  SkillAutoencoder& ae = out.autoencoder;
  SkillPrior& prior = out.prior;

  // New tasks get fresh embedding rows; this must happen before the
  // optimizer captures the parameter list.
  Rng task_rng = Rng::derive(seed, {kFinetune, kNewTask});
  int max_id = 0;
  for (const auto& e : demos.episodes) max_id = std::max(max_id, e.task_id);
  while (prior.num_tasks() <= static_cast<std::size_t>(max_id)) prior.append_task(task_rng);

  const PriorExamples examples = build_prior_examples(demos, ae, prior.config().obs_history);
  if (examples.count() == 0) throw ArgumentError("finetune: demonstrations shorter than T");

  ParamList params = prior.parameters();
  if (config.decoder_finetune) {
    for (auto& p : ae.decoder_parameters()) params.push_back(std::move(p));
  }
  Adam opt(params, adam_config(config.train));
  BatchSampler batches(examples.count(), config.train.batch_size,
                       Rng::derive(seed, {kFinetune, kShuffle}));
  Rng dropout_rng = Rng::derive(seed, {kFinetune, kDropout});
  Rng sample_rng = Rng::derive(seed, {kFinetune, kSampling});
  const ForwardContext ctx{&dropout_rng};
  const std::size_t steps = steps_for(config.train, batches);
  const std::size_t n = examples.block_size;
  const std::size_t stride = examples.window * examples.act_dim;

  for (std::size_t epoch = 1; epoch <= config.train.epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto rows = batches.next();
      const PriorInput context = examples.context(rows);
      std::vector<int> targets;
      std::vector<double> actions;
      for (std::size_t r : rows) {
        targets.insert(targets.end(), examples.targets.begin() + static_cast<long>(r * n),
                       examples.targets.begin() + static_cast<long>((r + 1) * n));
        actions.insert(actions.end(), examples.actions.begin() + static_cast<long>(r * stride),
                       examples.actions.begin() + static_cast<long>((r + 1) * stride));
      }
      opt.set_learning_rate(
          scheduled_rate(config.train, (epoch - 1) * steps + s, config.train.epochs * steps));
      opt.zero_grad();
      Tensor loss = prior.nll_loss(context, targets, ctx);
      if (config.decoder_finetune) {
        // Sampled codes are plain integers, so nothing flows back into the prior.
        const std::vector<int> z = prior.sample_batch(context, config.sampler, sample_rng);
        const Tensor a = Tensor::from({rows.size(), examples.window, examples.act_dim},
                                      std::move(actions));
        loss = loss + scale(l1_loss(ae.decode_indices(z, ctx), a), config.loss_scale);
      }
      loss.backward();
      opt.step();
      total += loss.item();
    }
    MetricsRecord r;
    r.phase = "finetune";
    r.epoch = epoch;
    r.loss = total / static_cast<double>(steps);
    r.task_id = max_id;
    r.seed = seed;
    emit(sink, r);
  }
  return out;
}

}  // namespace skilltok
