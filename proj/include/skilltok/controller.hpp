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

// Receding-horizon control: sample n skill tokens, decode a T-step plan,
// execute the first T_a actions, observe, replan.

#include <cstdint>
#include <string>
#include <vector>

#include "skilltok/autoencoder.hpp"
#include "skilltok/prior.hpp"
#include "skilltok/tasks.hpp"

namespace skilltok {

struct ControlConfig {
  std::size_t execution_horizon = 8;  // T_a
  std::size_t max_steps = 200;
  SamplerConfig sampler;
};

struct ActionChunk {
  std::vector<int> tokens;      // n sampled codes
  std::vector<double> plan;     // full decoded plan, [T, A]
  std::vector<double> actions;  // first T_a rows of plan
};

class Policy {
 public:
  // Throws ConfigError when the prior's vocabulary or block size does not
  // match the autoencoder, or T_a is outside [1, T].
  Policy(const SkillAutoencoder& autoencoder, const SkillPrior& prior,
         const ControlConfig& config);

  // obs_history: obs_history * obs_dim values, oldest first.
  ActionChunk act(std::span<const double> obs_history, int task_id, Rng& rng) const;

  const ControlConfig& config() const { return config_; }
  std::size_t obs_history() const { return prior_->config().obs_history; }

 private:
  const SkillAutoencoder* autoencoder_;
  const SkillPrior* prior_;
  ControlConfig config_;
};

struct RolloutResult {
  int task_id = 0;
  std::uint64_t seed = 0;
  bool success = false;
  bool aborted = false;  // the environment rejected an action
  std::string error;
  std::size_t steps = 0;
  std::vector<double> actions;            // executed displacements, [steps, A]
  std::vector<std::vector<int>> tokens;   // one entry per replan
  Vec2 final_position;
};

// Runs one episode from `start` until success or cfg.max_steps.
RolloutResult rollout(const TaskSpec& task, const Policy& policy, Vec2 start, Rng& rng);

// Episode e of task t with run seed s: start jitter and sampling both come
// from Rng::derive(s, {task id, e}).
RolloutResult evaluate_episode(const TaskSpec& task, const Policy& policy,
                               std::uint64_t seed, std::size_t episode,
                               double start_noise = 0.01);

struct TaskEvaluation {
  int task_id = 0;
  std::string name;
  std::vector<double> success_rates;  // one per seed
  double mean = 0.0;
  double stddev = 0.0;                // population std across seeds
};

// Success rate per task and seed, aggregated across seeds.
std::vector<TaskEvaluation> evaluate_tasks(const std::vector<TaskSpec>& tasks,
                                           const Policy& policy,
                                           const std::vector<std::uint64_t>& seeds,
                                           std::size_t episodes,
                                           std::vector<RolloutResult>* log = nullptr);

double mean_success(const std::vector<TaskEvaluation>& results);

// {"task_id":..,"seed":..,"success":..,"steps":..,"tokens":[[..],..]}
std::string to_json_line(const RolloutResult& result);

}  // namespace skilltok
