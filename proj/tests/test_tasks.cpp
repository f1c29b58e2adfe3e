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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "skilltok/errors.hpp"
#include "skilltok/tasks.hpp"
#include "skilltok/training.hpp"

namespace skilltok {
namespace {

std::vector<Vec2> positions(const Episode& e) {
  std::vector<Vec2> out;
  for (std::size_t t = 0; t < e.length(); ++t) {
    out.push_back({e.observations[t * kObsDim], e.observations[t * kObsDim + 1]});
  }
  out.push_back({out.back().x + e.actions[(e.length() - 1) * 2],
                 out.back().y + e.actions[(e.length() - 1) * 2 + 1]});
  return out;
}

const TrajectoryDataset& suite_data() {
  static const TrajectoryDataset data = generate_suite(3, pretraining_suite());
  return data;
}

TEST(PointEnv, StepClampsAndClips) {
  PointEnv env({0.95, 0.0});
  const Vec2 moved = env.step({0.5, -0.03});
  EXPECT_DOUBLE_EQ(moved.y, -0.03);
  EXPECT_NEAR(moved.x, 0.05, 1e-15);
  EXPECT_EQ(env.position().x, 1.0);
  EXPECT_EQ(env.steps(), 1u);
  EXPECT_THROW(env.step({std::numeric_limits<double>::quiet_NaN(), 0.0}), NumericalError);
  EXPECT_EQ(env.position().x, 1.0);
}

TEST(PointEnv, TransitionIsDeterministic) {
  PointEnv a({0.1, 0.2});
  PointEnv b({0.1, 0.2});
  for (int i = 0; i < 30; ++i) {
    const Vec2 act{0.03 * std::sin(i), -0.07 * std::cos(i)};
    a.step(act);
    b.step(act);
    ASSERT_EQ(a.position(), b.position());
  }
}

TEST(Tasks, NamesAndIds) {
  const auto names = task_names();
  ASSERT_EQ(names.size(), 9u);
  EXPECT_EQ(names.back(), "reverse-s");
  const auto suite = pretraining_suite();
  ASSERT_EQ(suite.tasks.size(), 8u);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(suite.tasks[i].id, i);
  EXPECT_EQ(fewshot_suite().tasks.front().id, 8);
  EXPECT_THROW(make_task("loop-de-loop", 0, 1), ArgumentError);
}

TEST(Tasks, TemplateLengthsAreWholeWindows) {
  for (const auto& name : task_names()) {
    const TaskSpec task = make_task(name, 0, 1);
    for (std::size_t b = 0; b < task.branches.size(); ++b) {
      EXPECT_EQ(task.steps(b) % 32, 0u) << name << " branch " << b;
      EXPECT_EQ(task.branches[b].back(), task.goal());
      EXPECT_EQ(task.branches[b].front(), task.start());
    }
  }
}

TEST(Tasks, CircleTasksOfferTwoRoutes) {
  EXPECT_EQ(make_task("circle-cw", 1, 1).branches.size(), 2u);
  EXPECT_NE(make_task("circle-cw", 1, 1).steps(0), make_task("circle-cw", 1, 1).steps(1));
}

TEST(Tasks, HeldOutTaskReusesSCurveEndpoints) {
  const TaskSpec s = make_task("s-curve", 2, 1);
  const TaskSpec r = make_task("reverse-s", 8, 1);
  EXPECT_EQ(s.start(), r.start());
  EXPECT_EQ(s.goal(), r.goal());
}

TEST(Generation, EpisodeAndWindowCounts) {
  const auto& data = suite_data();
  EXPECT_EQ(data.episodes.size(), 400u);
  std::size_t expected = 0;
  for (const auto& e : data.episodes) {
    ASSERT_GE(e.length(), 32u);
    expected += e.length() - 32 + 1;
  }
  EXPECT_EQ(data.window_count(32), expected);
  EXPECT_EQ(extract_action_windows(data, 32).count(), expected);
}

TEST(Generation, ActionsEqualPositionDeltas) {
  for (const auto& e : suite_data().episodes) {
    for (std::size_t t = 0; t + 1 < e.length(); ++t) {
      for (std::size_t k = 0; k < 2; ++k) {
        const double delta =
            e.observations[(t + 1) * kObsDim + k] - e.observations[t * kObsDim + k];
        ASSERT_NEAR(e.actions[t * 2 + k], delta, 1e-9);
      }
    }
  }
}

TEST(Generation, PrefixPairsShareHalfAWindow) {
  const auto& data = suite_data();
  auto episode = [&](int task, int i) -> const Episode& {
    return data.episodes[static_cast<std::size_t>(task) * 50 + i];
  };
  for (int i = 0; i < 50; ++i) {
    const Episode& ccw = episode(0, i);
    for (int other : {2, 4}) {
      const Episode& e = episode(other, i);
      ASSERT_EQ(e.task_id, other);
      for (std::size_t k = 0; k < 16 * 2; ++k) ASSERT_EQ(ccw.actions[k], e.actions[k]);
      ASSERT_EQ(ccw.observations[0], e.observations[0]);
    }
  }
}

TEST(Generation, PureFunctionOfSeed) {
  const auto suite = pretraining_suite(3);
  const auto a = generate_suite(9, suite);
  const auto b = generate_suite(9, suite);
  const auto c = generate_suite(10, suite);
  ASSERT_EQ(a.episodes.size(), b.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    EXPECT_EQ(a.episodes[i].actions, b.episodes[i].actions);
    EXPECT_EQ(a.episodes[i].observations, b.episodes[i].observations);
  }
  EXPECT_NE(a.episodes[0].actions, c.episodes[0].actions);
}

TEST(Generation, IndivisibleTemplateIsGenerationError) {
  SuiteSpec suite = pretraining_suite(1);
  suite.window = 30;
  EXPECT_THROW(generate_suite(0, suite), GenerationError);
}

TEST(Success, TemplatesPassAndStandingStillFails) {
  for (const auto& name : task_names()) {
    const TaskSpec task = make_task(name, 0, 1);
    for (const auto& branch : task.branches) EXPECT_TRUE(success(branch, task)) << name;
    const std::vector<Vec2> idle(10, task.start());
    EXPECT_FALSE(success(idle, task)) << name;
  }
}

TEST(Success, MidPathDeviationFails) {
  const TaskSpec task = make_task("line-across", 5, 1);
  std::vector<Vec2> path = task.branches.front();
  path[path.size() / 3].y += 0.2;
  EXPECT_FALSE(success(path, task));
}

TEST(Success, EveryDemonstrationSucceeds) {
  const auto suite = pretraining_suite();
  for (const auto& e : suite_data().episodes) {
    const TaskSpec& task = suite.tasks[e.task_id];
    const auto path = positions(e);
    EXPECT_TRUE(success(path, task)) << task.name;
    SuccessMonitor monitor(task);
    bool reached = false;
    for (const Vec2& p : path) reached |= monitor.update(p);
    EXPECT_TRUE(reached) << task.name;
  }
}

TEST(Success, MonitorTracksBestBranch) {
  const TaskSpec task = make_task("circle-cw", 1, 1);
  SuccessMonitor monitor(task);
  for (const Vec2& p : task.branches[1]) monitor.update(p);
  EXPECT_TRUE(monitor.succeeded());
  EXPECT_NEAR(monitor.max_deviation(1), 0.0, 1e-12);
  EXPECT_GT(monitor.max_deviation(0), 0.1);
}

}  // namespace
}  // namespace skilltok
