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

#include "skilltok/fsq.hpp"

#include <cmath>
#include <unordered_set>

#include "skilltok/errors.hpp"

namespace skilltok {

FsqSpec::FsqSpec(std::vector<int> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw ConfigError("fsq: at least one level is required");
  for (int l : levels_) {
    if (l < 2) throw ConfigError("fsq: level " + std::to_string(l) + " < 2");
    codebook_size_ *= static_cast<std::size_t>(l);
  }
}

// Widened by 1e-3 so tanh never has to reach +-1 to hit an end level
// (two levels would otherwise need an infinite shift).
double FsqSpec::half_width(std::size_t i) const { return (levels_[i] - 1) * (1.0 + 1e-3) / 2.0; }

double FsqSpec::offset(std::size_t i) const { return levels_[i] % 2 == 0 ? 0.5 : 0.0; }

double FsqSpec::shift(std::size_t i) const { return std::atanh(offset(i) / half_width(i)); }

Tensor fsq_bound(const Tensor& e, const FsqSpec& spec) {
  const std::size_t d = spec.dim();
  if (e.shape().back() != d) {
    throw DimensionError("fsq_bound: last axis " + std::to_string(e.shape().back()) +
                         " != code width " + std::to_string(d));
  }
  std::vector<double> half(d), off(d), sh(d);
  for (std::size_t i = 0; i < d; ++i) {
    half[i] = spec.half_width(i);
    off[i] = spec.offset(i);
    sh[i] = spec.shift(i);
  }
  Buffer out(e.numel());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double x = e.data()[k];
    if (!std::isfinite(x)) throw NumericalError("fsq_bound: non-finite input");
    const std::size_t i = k % d;
    out[k] = std::tanh(x + sh[i]) * half[i] - off[i];
  }
  return make_op_result(e.shape(), std::move(out), {e}, [e, d, half, off](TensorNode& self) {
    Buffer g(self.grad.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      const std::size_t i = k % d;
      const double t = (self.data[k] + off[i]) / half[i];  // tanh(e + shift)
      g[k] = self.grad[k] * half[i] * (1.0 - t * t);
    }
    accumulate_grad(e, g);
  });
}

Tensor round_ste(const Tensor& x) {
  Buffer out(x.numel());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = std::round(x.data()[k]);
  return make_op_result(x.shape(), std::move(out), {x},
                        [x](TensorNode& self) { accumulate_grad(x, self.grad); });
}

Quantized quantize(const Tensor& e, const FsqSpec& spec) {
  Quantized q;
  q.values = round_ste(fsq_bound(e, spec));
  const std::size_t d = spec.dim();
  const std::size_t rows = q.values.numel() / d;
  q.indices.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    q.indices.push_back(
        code_to_index(values_to_code(q.values.data().subspan(r * d, d), spec), spec));
  }
  return q;
}

int code_to_index(const SkillCode& code, const FsqSpec& spec) {
  if (code.digits.size() != spec.dim()) {
    throw DimensionError("code_to_index: code has " + std::to_string(code.digits.size()) +
                         " digits, expected " + std::to_string(spec.dim()));
  }
  int index = 0;
  for (std::size_t i = 0; i < spec.dim(); ++i) {
    const int digit = code.digits[i];
    if (digit < 0 || digit >= spec.levels()[i]) {
      throw RangeError("code_to_index: digit " + std::to_string(digit) + " at position " +
                       std::to_string(i) + " outside [0, " +
                       std::to_string(spec.levels()[i]) + ")");
    }
    index = index * spec.levels()[i] + digit;
  }
  return index;
}

SkillCode index_to_code(int index, const FsqSpec& spec) {
  if (index < 0 || static_cast<std::size_t>(index) >= spec.codebook_size()) {
    throw RangeError("index_to_code: index " + std::to_string(index) + " outside [0, " +
                     std::to_string(spec.codebook_size()) + ")");
  }
  SkillCode code;
  code.digits.resize(spec.dim());
  for (std::size_t i = spec.dim(); i-- > 0;) {
    code.digits[i] = index % spec.levels()[i];
    index /= spec.levels()[i];
  }
  return code;
}

SkillCode values_to_code(std::span<const double> values, const FsqSpec& spec) {
  if (values.size() != spec.dim()) {
    throw DimensionError("values_to_code: expected " + std::to_string(spec.dim()) +
                         " values");
  }
  SkillCode code;
  code.digits.resize(spec.dim());
  for (std::size_t i = 0; i < spec.dim(); ++i) {
    code.digits[i] = static_cast<int>(std::lround(values[i])) - spec.min_value(i);
  }
  return code;
}

Tensor indices_to_values(std::span<const int> indices, const FsqSpec& spec) {
  const std::size_t d = spec.dim();
  std::vector<double> out(indices.size() * d);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const SkillCode code = index_to_code(indices[r], spec);
    for (std::size_t i = 0; i < d; ++i) {
      out[r * d + i] = static_cast<double>(code.digits[i] + spec.min_value(i));
    }
  }
  if (indices.empty()) throw ArgumentError("indices_to_values: no indices");
  return Tensor::from({indices.size(), d}, std::move(out));
}

double utilization(std::span<const int> indices, const FsqSpec& spec) {
  if (indices.empty()) throw ArgumentError("utilization: empty token stream");
  std::unordered_set<int> seen;
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= spec.codebook_size()) {
      throw RangeError("utilization: index " + std::to_string(i) + " out of range");
    }
    seen.insert(i);
  }
  return static_cast<double>(seen.size()) / static_cast<double>(spec.codebook_size());
}

double utilization(std::span<const SkillCode> codes, const FsqSpec& spec) {
  std::vector<int> indices;
  indices.reserve(codes.size());
  for (const auto& c : codes) indices.push_back(code_to_index(c, spec));
  return utilization(std::span<const int>(indices), spec);
}

FsqBottleneck::FsqBottleneck(FsqSpec spec, std::size_t encoder_width,
                             std::size_t decoder_width, Rng& rng)
    : input_projection(encoder_width, spec.dim(), rng),
      output_projection(spec.dim(), decoder_width, rng),
      spec_(std::move(spec)) {}

Quantized FsqBottleneck::quantize(const Tensor& encoder_out) const {
  return skilltok::quantize(input_projection(encoder_out), spec_);
}

void FsqBottleneck::collect(const std::string& prefix, ParamList& out) const {
  input_projection.collect(prefix + "input_projection.", out);
  output_projection.collect(prefix + "output_projection.", out);
}

}  // namespace skilltok
