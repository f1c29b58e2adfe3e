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

// 2D point agent and a multitask demonstration suite.
//
// Templates are polylines sampled at one point per environment step. Several
// tasks start with the same ccw semicircle so their demonstrations share an
// action prefix exactly; reverse-s (held out) is stitched from the two
// semicircle primitives the training tasks already contain.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace skilltok {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double distance(Vec2 a, Vec2 b);

inline constexpr std::size_t kObsDim = 4;  // position, goal
inline constexpr std::size_t kActDim = 2;

class PointEnv {
 public:
  static constexpr double kMaxDelta = 0.1;  // per axis
  static constexpr double kArena = 1.0;     // positions live in [-1, 1]^2

  explicit PointEnv(Vec2 start = {}) { reset(start); }

  void reset(Vec2 start);
  // Clamps the action to +-kMaxDelta, moves, clips to the arena and returns
  // the displacement actually executed. Non-finite actions throw
  // NumericalError and leave the state untouched.
  Vec2 step(Vec2 action);

  Vec2 position() const { return position_; }
  std::size_t steps() const { return steps_; }

 private:
  Vec2 position_;
  std::size_t steps_ = 0;
};

// Builds a template one step at a time from the current point.
class PathBuilder {
 public:
  explicit PathBuilder(Vec2 start) : points_{start} {}

  // Circular arc around `center` (radius from the current point).
  // Positive sweep is counter-clockwise.
  PathBuilder& arc(Vec2 center, double sweep_degrees, std::size_t steps);
  // Arc whose radius shrinks or grows linearly to end_radius.
  PathBuilder& spiral(Vec2 center, double sweep_degrees, double end_radius,
                      std::size_t steps);
  PathBuilder& line(Vec2 to, std::size_t steps);
  PathBuilder& hold(std::size_t steps);

  const std::vector<Vec2>& points() const { return points_; }
  std::vector<Vec2> build() const { return points_; }

 private:
  std::vector<Vec2> points_;
};

struct TaskSpec {
  int id = 0;
  std::string name;
  // Alternative templates that all end at the same goal. Each holds
  // steps + 1 points, the first being the start.
  std::vector<std::vector<Vec2>> branches;
  double success_tolerance = 0.05;   // final distance to the goal
  double corridor_tolerance = 0.1;   // max distance from the template path
  std::size_t demos = 50;
  // Tasks with equal noise_stream draw identical jitter for demo i.
  std::uint64_t noise_stream = 0;

  Vec2 start() const { return branches.front().front(); }
  Vec2 goal() const { return branches.front().back(); }
  std::size_t steps(std::size_t branch) const { return branches.at(branch).size() - 1; }
  std::size_t max_steps() const;
};

struct SuiteSpec {
  std::vector<TaskSpec> tasks;
  std::size_t window = 32;        // T
  double start_noise = 0.01;      // std of the start jitter
  double action_noise = 0.002;    // std of per-step action jitter
  double tracking_gain = 0.2;     // pull back toward the template per step
};

// Known template names, training suite first, then the held-out task.
std::vector<std::string> task_names();
// Template for `name` with a trailing hold of `hold_steps` at the goal.
// Unknown names throw ArgumentError.
TaskSpec make_task(const std::string& name, int id, std::size_t demos,
                   std::size_t hold_steps = 32);

// The eight training tasks (ids 0..7) with `demos` demonstrations each.
SuiteSpec pretraining_suite(std::size_t demos = 50, std::size_t window = 32);
// reverse-s alone, with id `task_id` (default: first id after the training suite).
SuiteSpec fewshot_suite(std::size_t demos = 5, int task_id = 8, std::size_t window = 32);

std::vector<double> make_observation(Vec2 position, Vec2 goal);

struct Episode {
  int task_id = 0;
  std::vector<double> observations;  // steps x obs_dim, obs[t] is seen before action[t]
  std::vector<double> actions;       // steps x act_dim

  std::size_t length(std::size_t act_dim = kActDim) const {
    return actions.size() / act_dim;
  }
};

struct TrajectoryDataset {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  std::uint64_t seed = 0;
  std::size_t obs_dim = kObsDim;
  std::size_t act_dim = kActDim;
  std::vector<Episode> episodes;

  // Number of stride-1 windows of length `window` (short tails dropped).
  std::size_t window_count(std::size_t window) const;
};

// Pure function of (seed, suite). Every template must split into whole
// T-step windows, otherwise GenerationError.
TrajectoryDataset generate_suite(std::uint64_t seed, const SuiteSpec& suite);

// Tracks corridor deviation per branch as the agent moves.
class SuccessMonitor {
 public:
  explicit SuccessMonitor(const TaskSpec& task);

  // Feeds the next position; returns true once the goal is reached while
  // some branch's corridor has never been left.
  bool update(Vec2 position);
  bool succeeded() const { return succeeded_; }
  double max_deviation(std::size_t branch) const { return deviation_.at(branch); }

 private:
  const TaskSpec* task_;
  std::vector<double> deviation_;
  bool succeeded_ = false;
};

// Whole-path check: final point within tolerance of the goal and every
// point within the corridor of at least one branch.
bool success(std::span<const Vec2> path, const TaskSpec& task);

double distance_to_polyline(Vec2 p, const std::vector<Vec2>& polyline);

}  // namespace skilltok
