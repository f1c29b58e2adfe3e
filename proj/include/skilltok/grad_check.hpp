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
#include <functional>
#include <string>
#include <vector>

#include "skilltok/nn.hpp"
#include "skilltok/tensor.hpp"

namespace skilltok {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_parameter = 0;  // index into the checked list
  std::size_t worst_component = 0;
};

// Compares the reverse-mode gradient of `fn` at `point` with central finite
// differences. Error per component is |g_ad - g_fd| / max(1, |g_fd|).
// Throws NumericalError naming the component when fn is not finite.
double grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& point,
                  double eps = 1e-5);

// Same check with respect to every tensor in `params`; `loss` rebuilds the
// graph from the current parameter values each call.
GradCheckResult grad_check_params(const std::function<Tensor()>& loss,
                                  const ParamList& params, double eps = 1e-5);

struct GradCheckCase {
  std::string name;
  double max_relative_error = 0.0;
};

// Finite-difference check of every differentiable primitive, the FSQ bound,
// a tiny autoencoder (straight-through rounding held at its base-point
// offset) and a tiny prior, at random points drawn from `seed`.
std::vector<GradCheckCase> run_grad_check_suite(std::uint64_t seed);

}  // namespace skilltok
