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

#include "skilltok/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "skilltok/errors.hpp"
#include "skilltok/rng.hpp"

namespace skilltok {
namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

// Demonstration coordinates live on a 2^-20 grid so that positions and
// their differences are exact in the float32 dataset format.
constexpr double kGrid = 1048576.0;

double snap(double v) { return std::round(v * kGrid) / kGrid; }

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return distance(p, {a.x + t * dx, a.y + t * dy});
}

// Semicircle radius and step count shared by the circle/s-curve family.
constexpr double kRadius = 0.35;
constexpr std::size_t kSemicircleSteps = 48;

}  // namespace

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

void PointEnv::reset(Vec2 start) {
  position_ = {std::clamp(start.x, -kArena, kArena), std::clamp(start.y, -kArena, kArena)};
  steps_ = 0;
}

Vec2 PointEnv::step(Vec2 action) {
  if (!std::isfinite(action.x) || !std::isfinite(action.y)) {
    throw NumericalError("PointEnv::step: non-finite action");
  }
  const double ax = std::clamp(action.x, -kMaxDelta, kMaxDelta);
  const double ay = std::clamp(action.y, -kMaxDelta, kMaxDelta);
  const Vec2 next{std::clamp(position_.x + ax, -kArena, kArena),
                  std::clamp(position_.y + ay, -kArena, kArena)};
  const Vec2 executed{next.x - position_.x, next.y - position_.y};
  position_ = next;
  ++steps_;
  return executed;
}

PathBuilder& PathBuilder::arc(Vec2 center, double sweep_degrees, std::size_t steps) {
  const Vec2 p = points_.back();
  return spiral(center, sweep_degrees, distance(p, center), steps);
}

PathBuilder& PathBuilder::spiral(Vec2 center, double sweep_degrees, double end_radius,
                                 std::size_t steps) {
  const Vec2 p = points_.back();
  const double r0 = distance(p, center);
  const double a0 = std::atan2(p.y - center.y, p.x - center.x);
  for (std::size_t i = 1; i <= steps; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(steps);
    const double r = r0 + (end_radius - r0) * f;
    const double a = a0 + sweep_degrees * kDegree * f;
    points_.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
  }
  return *this;
}

PathBuilder& PathBuilder::line(Vec2 to, std::size_t steps) {
  const Vec2 p = points_.back();
  for (std::size_t i = 1; i <= steps; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(steps);
    points_.push_back({p.x + (to.x - p.x) * f, p.y + (to.y - p.y) * f});
  }
  return *this;
}

PathBuilder& PathBuilder::hold(std::size_t steps) {
  const Vec2 p = points_.back();
  points_.insert(points_.end(), steps, p);
  return *this;
}

std::size_t TaskSpec::max_steps() const {
  std::size_t m = 0;
  for (std::size_t b = 0; b < branches.size(); ++b) m = std::max(m, steps(b));
  return m;
}

std::vector<std::string> task_names() {
  return {"circle-ccw", "circle-cw",   "s-curve", "c-curve", "figure-eight",
          "line-across", "zigzag", "spiral", "reverse-s"};
}

TaskSpec make_task(const std::string& name, int id, std::size_t demos,
                   std::size_t hold_steps) {
  TaskSpec task;
  task.id = id;
  task.name = name;
  task.demos = demos;
  task.noise_stream = 16 + static_cast<std::uint64_t>(id);

  const Vec2 lower{0.0, -kRadius};
  const Vec2 upper{0.0, kRadius};
  const Vec2 bottom{0.0, -2.0 * kRadius};
  const std::size_t semi = kSemicircleSteps;

  if (name == "circle-ccw" || name == "s-curve" || name == "figure-eight") {
    PathBuilder path(bottom);
    if (name == "circle-ccw") {
      path.arc(lower, 240.0, 64);
    } else if (name == "s-curve") {
      path.arc(lower, 180.0, semi).arc(upper, -180.0, semi);
    } else {
      path.arc(lower, 180.0, semi).arc(upper, -300.0, 80);
    }
    task.branches.push_back(path.hold(hold_steps).build());
    task.noise_stream = 1;  // shared: identical jitter over the common semicircle
  } else if (name == "circle-cw") {
    // Long way round or short way round to the same point.
    const Vec2 c{0.55, 0.55};
    const Vec2 s{0.25, 0.55};
    task.branches.push_back(PathBuilder(s).arc(c, -240.0, 64).hold(hold_steps).build());
    task.branches.push_back(PathBuilder(s).arc(c, 120.0, 32).hold(hold_steps).build());
  } else if (name == "c-curve") {
    task.branches.push_back(PathBuilder({-0.5, 0.75})
                                .arc({-0.5, 0.45}, 180.0, 48)
                                .line({-0.1, 0.15}, 16)
                                .hold(hold_steps)
                                .build());
  } else if (name == "line-across") {
    task.branches.push_back(
        PathBuilder({-0.8, -0.5}).line({0.8, -0.9}, 64).hold(hold_steps).build());
  } else if (name == "zigzag") {
    task.branches.push_back(PathBuilder({-0.9, -0.1})
                                .line({-0.5, -0.4}, 16)
                                .line({-0.1, -0.1}, 16)
                                .line({0.3, -0.4}, 16)
                                .line({0.7, -0.1}, 16)
                                .hold(hold_steps)
                                .build());
  } else if (name == "spiral") {
    task.branches.push_back(PathBuilder({0.05, -0.45})
                                .spiral({0.45, -0.45}, 540.0, 0.1, 96)
                                .hold(hold_steps)
                                .build());
  } else if (name == "reverse-s") {
    // Mirror of s-curve: cw lower semicircle, then ccw upper one.
    task.branches.push_back(PathBuilder(bottom)
                                .arc(lower, -180.0, semi)
                                .arc(upper, 180.0, semi)
                                .hold(hold_steps)
                                .build());
  } else {
    throw ArgumentError("unknown task '" + name + "'");
  }
  // Grid points are float32-exact, so observations survive the dataset file.
  for (auto& b : task.branches) {
    for (Vec2& p : b) p = {snap(p.x), snap(p.y)};
  }
  // Branches must agree on the goal.
  for (auto& b : task.branches) b.back() = task.branches.front().back();
  return task;
}

SuiteSpec pretraining_suite(std::size_t demos, std::size_t window) {
  SuiteSpec suite;
  suite.window = window;
  const auto names = task_names();
  for (int id = 0; id < 8; ++id) suite.tasks.push_back(make_task(names[id], id, demos, window));
  return suite;
}

SuiteSpec fewshot_suite(std::size_t demos, int task_id, std::size_t window) {
  SuiteSpec suite;
  suite.window = window;
  suite.tasks.push_back(make_task("reverse-s", task_id, demos, window));
  return suite;
}

std::vector<double> make_observation(Vec2 position, Vec2 goal) {
  return {position.x, position.y, goal.x, goal.y};
}

std::size_t TrajectoryDataset::window_count(std::size_t window) const {
  std::size_t n = 0;
  for (const auto& e : episodes) {
    const std::size_t len = e.length(act_dim);
    if (len >= window) n += len - window + 1;
  }
  return n;
}

TrajectoryDataset generate_suite(std::uint64_t seed, const SuiteSpec& suite) {
  if (suite.window == 0) throw GenerationError("window length must be positive");
  TrajectoryDataset data;
  data.seed = seed;
  for (const TaskSpec& task : suite.tasks) {
    if (task.branches.empty()) throw GenerationError("task '" + task.name + "' has no template");
    for (std::size_t b = 0; b < task.branches.size(); ++b) {
      const std::size_t steps = task.steps(b);
      if (steps == 0 || steps % suite.window != 0) {
        throw GenerationError("task '" + task.name + "' branch " + std::to_string(b) +
                              " has " + std::to_string(steps) +
                              " steps, not a multiple of the window " +
                              std::to_string(suite.window));
      }
    }
    const Vec2 goal = task.goal();
    for (std::size_t i = 0; i < task.demos; ++i) {
      const auto& tmpl = task.branches[i % task.branches.size()];
      Rng rng = Rng::derive(seed, {task.noise_stream, i});
      const double sx = rng.normal(0.0, suite.start_noise);
      const double sy = rng.normal(0.0, suite.start_noise);
      PointEnv env({snap(tmpl[0].x + sx), snap(tmpl[0].y + sy)});

      Episode ep;
      ep.task_id = task.id;
      const std::size_t steps = tmpl.size() - 1;
      ep.observations.reserve(steps * kObsDim);
      ep.actions.reserve(steps * kActDim);
      for (std::size_t t = 0; t < steps; ++t) {
        const Vec2 x = env.position();
        const auto obs = make_observation(x, goal);
        ep.observations.insert(ep.observations.end(), obs.begin(), obs.end());
        const double nx = rng.normal(0.0, suite.action_noise);
        const double ny = rng.normal(0.0, suite.action_noise);
        const Vec2 want{
            snap(tmpl[t + 1].x - tmpl[t].x + suite.tracking_gain * (tmpl[t].x - x.x) + nx),
            snap(tmpl[t + 1].y - tmpl[t].y + suite.tracking_gain * (tmpl[t].y - x.y) + ny)};
        const Vec2 done = env.step(want);
        ep.actions.push_back(done.x);
        ep.actions.push_back(done.y);
      }
      data.episodes.push_back(std::move(ep));
    }
  }
  return data;
}

double distance_to_polyline(Vec2 p, const std::vector<Vec2>& polyline) {
  if (polyline.size() == 1) return distance(p, polyline.front());
  double best = INFINITY;
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    best = std::min(best, segment_distance(p, polyline[i], polyline[i + 1]));
  }
  return best;
}

SuccessMonitor::SuccessMonitor(const TaskSpec& task)
    : task_(&task), deviation_(task.branches.size(), 0.0) {}

bool SuccessMonitor::update(Vec2 position) {
  const bool at_goal = distance(position, task_->goal()) <= task_->success_tolerance;
  for (std::size_t b = 0; b < deviation_.size(); ++b) {
    deviation_[b] = std::max(deviation_[b], distance_to_polyline(position, task_->branches[b]));
    if (at_goal && deviation_[b] <= task_->corridor_tolerance) succeeded_ = true;
  }
  return succeeded_;
}

bool success(std::span<const Vec2> path, const TaskSpec& task) {
  if (path.empty()) return false;
  if (distance(path.back(), task.goal()) > task.success_tolerance) return false;
  for (const auto& branch : task.branches) {
    const bool inside = std::all_of(path.begin(), path.end(), [&](Vec2 p) {
      return distance_to_polyline(p, branch) <= task.corridor_tolerance;
    });
    if (inside) return true;
  }
  return false;
}

}  // namespace skilltok
