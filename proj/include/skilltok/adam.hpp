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

#include <cstdint>
#include <vector>

#include "skilltok/nn.hpp"

namespace skilltok {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global gradient-norm clip; 0 disables.
  double grad_clip = 0.0;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
  AdamConfig config;
};

AdamState make_adam_state(const ParamList& params, const AdamConfig& config);

// One bias-corrected Adam update using each parameter's accumulated gradient
// (missing gradients count as zero). All gradients are checked before any
// parameter is touched; a non-finite one throws NumericalError naming it.
void adam_step(const ParamList& params, AdamState& state);

class Adam {
 public:
  Adam(ParamList params, const AdamConfig& config);

  void zero_grad();
  // Clips (if configured) then applies adam_step. Returns the pre-clip norm.
  double step();

  void set_learning_rate(double lr) { state_.config.learning_rate = lr; }

  const AdamState& state() const { return state_; }
  const ParamList& params() const { return params_; }

 private:
  ParamList params_;
  AdamState state_;
};

double gradient_norm(const ParamList& params);

}  // namespace skilltok
