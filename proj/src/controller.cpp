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

#include "skilltok/controller.hpp"

#include <cmath>
#include <deque>

#include <json.hpp>

#include "skilltok/errors.hpp"

namespace skilltok {

Policy::Policy(const SkillAutoencoder& autoencoder, const SkillPrior& prior,
               const ControlConfig& config)
    : autoencoder_(&autoencoder), prior_(&prior), config_(config) {
  if (prior.config().vocab_size != autoencoder.fsq().codebook_size()) {
    throw ConfigError("policy: prior vocabulary " + std::to_string(prior.config().vocab_size) +
                      " != codebook size " +
                      std::to_string(autoencoder.fsq().codebook_size()));
  }
  if (prior.config().block_size != autoencoder.num_tokens()) {
    throw ConfigError("policy: prior block size does not match the autoencoder token count");
  }
  if (config.execution_horizon == 0 || config.execution_horizon > autoencoder.seq_len()) {
    throw ConfigError("policy: execution horizon " + std::to_string(config.execution_horizon) +
                      " outside [1, " + std::to_string(autoencoder.seq_len()) + "]");
  }
}

ActionChunk Policy::act(std::span<const double> obs_history, int task_id, Rng& rng) const {
  NoGradGuard no_grad;
  ActionChunk chunk;
  chunk.tokens = prior_->sample(task_id, obs_history, config_.sampler, rng);
  const Tensor plan = autoencoder_->decode_indices(chunk.tokens);
  chunk.plan.assign(plan.data().begin(), plan.data().end());
  const std::size_t a = autoencoder_->action_dim();
  chunk.actions.assign(chunk.plan.begin(),
                       chunk.plan.begin() + static_cast<long>(config_.execution_horizon * a));
  return chunk;
}

RolloutResult rollout(const TaskSpec& task, const Policy& policy, Vec2 start, Rng& rng) {
  RolloutResult result;
  result.task_id = task.id;
  PointEnv env(start);
  SuccessMonitor monitor(task);
  const Vec2 goal = task.goal();
  const std::size_t h = policy.obs_history();
  const std::size_t ta = policy.config().execution_horizon;
  const std::size_t max_steps = policy.config().max_steps;

  // Left-padded by repeating the first observation.
  std::deque<std::vector<double>> history(h, make_observation(env.position(), goal));
  monitor.update(env.position());

  try {
    while (result.steps < max_steps && !monitor.succeeded()) {
      std::vector<double> context;
      for (const auto& o : history) context.insert(context.end(), o.begin(), o.end());
      const ActionChunk chunk = policy.act(context, task.id, rng);
      result.tokens.push_back(chunk.tokens);
      for (std::size_t i = 0; i < ta && result.steps < max_steps; ++i) {
        const Vec2 done = env.step({chunk.actions[2 * i], chunk.actions[2 * i + 1]});
        result.actions.push_back(done.x);
        result.actions.push_back(done.y);
        ++result.steps;
        history.pop_front();
        history.push_back(make_observation(env.position(), goal));
        if (monitor.update(env.position())) break;
      }
    }
  } catch (const Error& e) {
    result.aborted = true;
    result.error = e.what();
  }
  result.success = monitor.succeeded() && !result.aborted;
  result.final_position = env.position();
  return result;
}

RolloutResult evaluate_episode(const TaskSpec& task, const Policy& policy, std::uint64_t seed,
                               std::size_t episode, double start_noise) {
  Rng rng = Rng::derive(seed, {static_cast<std::uint64_t>(task.id), episode});
  const Vec2 s = task.start();
  const double dx = rng.normal(0.0, start_noise);
  const double dy = rng.normal(0.0, start_noise);
  RolloutResult r = rollout(task, policy, {s.x + dx, s.y + dy}, rng);
  r.seed = seed;
  return r;
}

std::vector<TaskEvaluation> evaluate_tasks(const std::vector<TaskSpec>& tasks,
                                           const Policy& policy,
                                           const std::vector<std::uint64_t>& seeds,
                                           std::size_t episodes,
                                           std::vector<RolloutResult>* log) {
  if (episodes == 0 || seeds.empty()) {
    throw ArgumentError("evaluate_tasks: need at least one episode and one seed");
  }
  std::vector<TaskEvaluation> out;
  for (const auto& task : tasks) {
    TaskEvaluation ev;
    ev.task_id = task.id;
    ev.name = task.name;
    for (std::uint64_t seed : seeds) {
      std::size_t wins = 0;
      for (std::size_t e = 0; e < episodes; ++e) {
        RolloutResult r = evaluate_episode(task, policy, seed, e);
        wins += r.success ? 1 : 0;
        if (log) log->push_back(std::move(r));
      }
      ev.success_rates.push_back(static_cast<double>(wins) / static_cast<double>(episodes));
    }
    double sum = 0.0;
    for (double v : ev.success_rates) sum += v;
    ev.mean = sum / static_cast<double>(ev.success_rates.size());
    double var = 0.0;
    for (double v : ev.success_rates) var += (v - ev.mean) * (v - ev.mean);
    ev.stddev = std::sqrt(var / static_cast<double>(ev.success_rates.size()));
    out.push_back(std::move(ev));
  }
  return out;
}

double mean_success(const std::vector<TaskEvaluation>& results) {
  if (results.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : results) sum += r.mean;
  return sum / static_cast<double>(results.size());
}

std::string to_json_line(const RolloutResult& result) {
  nlohmann::ordered_json j;
  j["task_id"] = result.task_id;
  j["seed"] = result.seed;
  j["success"] = result.success;
  j["steps"] = result.steps;
  if (result.aborted) j["error"] = result.error;
  j["tokens"] = result.tokens;
  return j.dump();
}

}  // namespace skilltok
