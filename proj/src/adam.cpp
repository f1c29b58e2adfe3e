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

#include "skilltok/adam.hpp"

#include <cmath>

#include "skilltok/errors.hpp"

namespace skilltok {

AdamState make_adam_state(const ParamList& params, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.tensor.numel(), 0.0);
    state.second_moment.emplace_back(p.tensor.numel(), 0.0);
  }
  return state;
}

void adam_step(const ParamList& params, AdamState& state) {
  if (state.first_moment.size() != params.size()) {
    throw ConfigError("adam_step: state tracks " +
                      std::to_string(state.first_moment.size()) + " parameters, got " +
                      std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params[i].tensor;
    if (state.first_moment[i].size() != t.numel()) {
      throw DimensionError("adam_step: moment size mismatch for '" + params[i].name + "'");
    }
    if (!t.has_grad()) continue;
    for (double g : t.grad()) {
      if (!std::isfinite(g)) {
        throw NumericalError("adam_step: non-finite gradient in '" + params[i].name + "'");
      }
    }
  }

  state.step += 1;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor p = params[i].tensor;
    std::span<double> w = p.mutable_data();
    std::vector<double>& m = state.first_moment[i];
    std::vector<double>& v = state.second_moment[i];
    const double* grad = p.has_grad() ? p.grad().data() : nullptr;
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double g = grad ? grad[j] : 0.0;
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      w[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

double gradient_norm(const ParamList& params) {
  double total = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) total += g * g;
  }
  return std::sqrt(total);
}

Adam::Adam(ParamList params, const AdamConfig& config)
    : params_(std::move(params)), state_(make_adam_state(params_, config)) {}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

double Adam::step() {
  const double norm = gradient_norm(params_);
  const double clip = state_.config.grad_clip;
  if (clip > 0.0 && std::isfinite(norm) && norm > clip) {
    const double factor = clip / norm;
    for (auto& p : params_) {
      if (!p.tensor.has_grad()) continue;
      for (double& g : p.tensor.mutable_grad()) g *= factor;
    }
  }
  adam_step(params_, state_);
  return norm;
}

}  // namespace skilltok
