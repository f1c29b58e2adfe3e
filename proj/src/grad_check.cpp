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

#include "skilltok/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "skilltok/errors.hpp"

namespace skilltok {
namespace {

double finite_scalar(const Tensor& y, std::size_t param, std::size_t component) {
  const double v = y.item();
  if (!std::isfinite(v)) {
    throw NumericalError("grad_check: non-finite output at parameter " +
                         std::to_string(param) + " component " +
                         std::to_string(component));
  }
  return v;
}

}  // namespace

double grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& point,
                  double eps) {
  Tensor x = point.clone(true);
  ParamList params{{"x", x}};
  return grad_check_params([&] { return fn(x); }, params, eps).max_relative_error;
}

GradCheckResult grad_check_params(const std::function<Tensor()>& loss,
                                  const ParamList& params, double eps) {
  for (const auto& p : params) {
    Tensor t = p.tensor;
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Tensor y = loss();
  finite_scalar(y, 0, 0);
  y.backward();

  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) {
    if (p.tensor.has_grad()) {
      analytic.emplace_back(p.tensor.grad().begin(), p.tensor.grad().end());
    } else {
      analytic.emplace_back(p.tensor.numel(), 0.0);
    }
  }

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor t = params[pi].tensor;
    std::span<double> w = t.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + eps;
      const double up = finite_scalar(loss(), pi, i);
      w[i] = saved - eps;
      const double down = finite_scalar(loss(), pi, i);
      w[i] = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double err = std::fabs(analytic[pi][i] - fd) / std::max(1.0, std::fabs(fd));
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = pi;
        result.worst_component = i;
      }
    }
  }
  return result;
}

}  // namespace skilltok
