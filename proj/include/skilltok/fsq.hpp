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

// Finite scalar quantization.
//
// Each of the d latent dimensions is squashed into a range that rounds to
// exactly levels[i] integers, then rounded with a straight-through gradient.
// The implicit codebook is the product grid, of size prod(levels).
//
// Dimension i with L = levels[i]:
//   half = (L - 1) / 2, offset = (L even ? 0.5 : 0), shift = atanh(offset / half)
//   bound(e) = tanh(e + shift) * half - offset        in (-floor(L/2), ceil(L/2) - 1)
//   value    = round(bound(e))                        in {-floor(L/2), ..., ceil(L/2) - 1}
//   digit    = value + floor(L/2)                     in {0, ..., L - 1}
// Flat index is mixed radix with the last dimension least significant.

#include <cstddef>
#include <span>
#include <vector>

#include "skilltok/nn.hpp"
#include "skilltok/tensor.hpp"

namespace skilltok {

class FsqSpec {
 public:
  FsqSpec() : FsqSpec(std::vector<int>{8, 5, 5, 5}) {}
  // Throws ConfigError unless every level is >= 2.
  explicit FsqSpec(std::vector<int> levels);

  const std::vector<int>& levels() const { return levels_; }
  std::size_t dim() const { return levels_.size(); }
  std::size_t codebook_size() const { return codebook_size_; }

  double half_width(std::size_t i) const;
  double offset(std::size_t i) const;
  double shift(std::size_t i) const;
  // Smallest grid value of dimension i, -floor(L/2).
  int min_value(std::size_t i) const { return -(levels_[i] / 2); }

  bool operator==(const FsqSpec& other) const { return levels_ == other.levels_; }

 private:
  std::vector<int> levels_;
  std::size_t codebook_size_ = 1;
};

struct SkillCode {
  std::vector<int> digits;
  bool operator==(const SkillCode&) const = default;
};

// Bounding function, elementwise over the last axis (width d).
Tensor fsq_bound(const Tensor& e, const FsqSpec& spec);

// Forward: round(x). Backward: identity.
Tensor round_ste(const Tensor& x);

struct Quantized {
  std::vector<int> indices;  // one flat index per row
  Tensor values;             // rounded grid values, straight-through to e
};

Quantized quantize(const Tensor& e, const FsqSpec& spec);

int code_to_index(const SkillCode& code, const FsqSpec& spec);
SkillCode index_to_code(int index, const FsqSpec& spec);
SkillCode values_to_code(std::span<const double> values, const FsqSpec& spec);

// Grid values for a list of flat indices, [indices.size(), d]. No history.
Tensor indices_to_values(std::span<const int> indices, const FsqSpec& spec);

// Fraction of the codebook observed in a non-empty stream.
double utilization(std::span<const int> indices, const FsqSpec& spec);
double utilization(std::span<const SkillCode> codes, const FsqSpec& spec);

// The learned maps around the quantizer: encoder width -> d before bounding,
// d -> decoder width after rounding.
class FsqBottleneck {
 public:
  FsqBottleneck() = default;
  FsqBottleneck(FsqSpec spec, std::size_t encoder_width, std::size_t decoder_width,
                Rng& rng);

  const FsqSpec& spec() const { return spec_; }
  Quantized quantize(const Tensor& encoder_out) const;
  Tensor project_out(const Tensor& values) const { return output_projection(values); }
  void collect(const std::string& prefix, ParamList& out) const;

  Linear input_projection;
  Linear output_projection;

 private:
  FsqSpec spec_;
};

}  // namespace skilltok
