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

#include <cmath>

#include "skilltok/autoencoder.hpp"
#include "skilltok/fsq.hpp"
#include "skilltok/grad_check.hpp"
#include "skilltok/ops.hpp"
#include "skilltok/prior.hpp"

namespace skilltok {
namespace {

Tensor randn(Shape shape, Rng& rng, double stddev = 1.0) {
  std::vector<double> v(numel_of(shape));
  for (double& x : v) x = rng.normal(0.0, stddev);
  return Tensor::from(std::move(shape), std::move(v));
}

// Scalar read-out sum(y * w) with w fixed on first use, so every output
// component carries a distinct weight.
class Readout {
 public:
  explicit Readout(std::uint64_t seed) : rng_(seed) {}
  Tensor operator()(const Tensor& y) {
    if (!weights_.defined()) weights_ = randn(y.shape(), rng_);
    return sum(mul(y, weights_));
  }

 private:
  Rng rng_;
  Tensor weights_;
};

class Suite {
 public:
  explicit Suite(std::uint64_t seed) : seed_(seed), rng_(Rng::derive(seed, {0})) {}

  // fn maps the listed inputs to any tensor; a Readout makes it scalar.
  void check(const std::string& name, std::vector<Tensor> inputs,
             const std::function<Tensor(const std::vector<Tensor>&)>& fn) {
    ParamList params;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      params.push_back({"in" + std::to_string(i), inputs[i]});
    }
    Readout readout(seed_ + cases_.size() + 1);
    const auto result = grad_check_params([&] { return readout(fn(inputs)); }, params);
    cases_.push_back({name, result.max_relative_error});
  }

  void check_params(const std::string& name, const ParamList& params,
                    const std::function<Tensor()>& loss) {
    cases_.push_back({name, grad_check_params(loss, params).max_relative_error});
  }

  Tensor rand(Shape shape, double stddev = 1.0) { return randn(std::move(shape), rng_, stddev); }
  Rng& rng() { return rng_; }
  std::vector<GradCheckCase> take() { return std::move(cases_); }

 private:
  std::uint64_t seed_;
  Rng rng_;
  std::vector<GradCheckCase> cases_;
};

void primitive_cases(Suite& s) {
  using In = std::vector<Tensor>;
  s.check("add", {s.rand({3, 4}), s.rand({3, 4})}, [](const In& x) { return x[0] + x[1]; });
  s.check("sub", {s.rand({3, 4}), s.rand({3, 4})}, [](const In& x) { return x[0] - x[1]; });
  s.check("mul", {s.rand({3, 4}), s.rand({3, 4})}, [](const In& x) { return x[0] * x[1]; });
  s.check("scale", {s.rand({5})}, [](const In& x) { return scale(x[0], -1.7); });
  s.check("add_scalar", {s.rand({5})}, [](const In& x) { return add_scalar(x[0], 0.3); });
  s.check("add_broadcast", {s.rand({2, 3, 4}), s.rand({3, 4})},
          [](const In& x) { return add_broadcast(x[0], x[1]); });
  s.check("matmul", {s.rand({2, 3, 4}), s.rand({4, 5})},
          [](const In& x) { return matmul(x[0], x[1]); });
  s.check("linear", {s.rand({3, 4}), s.rand({4, 2}), s.rand({2})},
          [](const In& x) { return linear(x[0], x[1], x[2]); });
  s.check("tanh", {s.rand({6})}, [](const In& x) { return tanh(x[0]); });
  s.check("gelu", {s.rand({6}, 2.0)}, [](const In& x) { return gelu(x[0]); });
  s.check("relu", {s.rand({6})}, [](const In& x) { return relu(x[0]); });
  s.check("abs", {s.rand({6})}, [](const In& x) { return abs(x[0]); });
  s.check("layer_norm", {s.rand({3, 5}), s.rand({5}), s.rand({5})},
          [](const In& x) { return layer_norm(x[0], x[1], x[2]); });
  s.check("embedding", {s.rand({6, 3})}, [](const In& x) {
    const std::vector<int> ids{4, 0, 4, 2};
    return embedding(x[0], ids);
  });
  s.check("reshape", {s.rand({2, 6})},
          [](const In& x) { return tanh(reshape(x[0], {3, 4})); });
  s.check("concat_slice", {s.rand({2, 3, 2}), s.rand({2, 2, 2})}, [](const In& x) {
    return slice_seq(concat_seq({x[0], x[1]}), 1, 3);
  });
  s.check("conv1d", {s.rand({2, 7, 3}), s.rand({3, 3, 4}), s.rand({4})},
          [](const In& x) { return conv1d(x[0], x[1], x[2], 2, 1); });
  s.check("causal_conv1d", {s.rand({2, 8, 2}), s.rand({5, 2, 3})},
          [](const In& x) { return causal_conv1d(x[0], x[1], 2); });
  s.check("attention", {s.rand({2, 4, 6}), s.rand({2, 4, 6}), s.rand({2, 4, 6})},
          [](const In& x) {
            return attention(x[0], x[1], x[2], 2, AttentionMask::causal(4));
          });
  s.check("cross_attention", {s.rand({3, 4}), s.rand({5, 4}), s.rand({5, 4})},
          [](const In& x) {
            return masked_attention(x[0], x[1], x[2], AttentionMask::all(3, 5));
          });
  // A fresh generator per call keeps the dropout mask fixed across evaluations.
  const std::uint64_t drop_seed = s.rng().next_u64();
  s.check("dropout", {s.rand({4, 5})}, [drop_seed](const In& x) {
    Rng r(drop_seed);
    return dropout(x[0], 0.3, &r);
  });
  s.check("attention_dropout", {s.rand({3, 4}), s.rand({3, 4}), s.rand({3, 4})},
          [drop_seed](const In& x) {
            Rng r(drop_seed);
            return attention(x[0], x[1], x[2], 1, AttentionMask::causal(3), 0.2, &r);
          });
  s.check("cross_entropy", {s.rand({4, 6})}, [](const In& x) {
    const std::vector<int> targets{5, 0, 2, 2};
    return cross_entropy(x[0], targets);
  });
  Tensor target = s.rand({3, 4});
  s.check("l1_loss", {s.rand({3, 4})},
          [target](const In& x) { return l1_loss(x[0], target); });
  s.check("mean", {s.rand({3, 4})}, [](const In& x) { return mean(x[0]); });
  s.check("fsq_bound", {s.rand({5, 4}, 1.5)},
          [](const In& x) { return fsq_bound(x[0], FsqSpec()); });
}

void autoencoder_case(Suite& s) {
  EncoderConfig enc;
  enc.seq_len = 8;
  enc.kernels = {3, 3};
  enc.strides = {2, 2};
  enc.width = 8;
  enc.layers = 1;
  enc.heads = 2;
  enc.attn_dropout = 0.0;
  enc.ffn_mult = 2;
  DecoderConfig dec;
  dec.width = 8;
  dec.layers = 1;
  dec.heads = 2;
  dec.attn_dropout = 0.0;
  dec.ffn_mult = 2;
  const FsqSpec fsq;
  SkillAutoencoder model(enc, dec, fsq, s.rng().next_u64());
  const Tensor actions = s.rand({2, 8, 2}, 0.05);

  // Straight-through surrogate: bound(e) + (round(bound(e0)) - bound(e0)),
  // the offset frozen at the base point. Its exact gradient is what the
  // straight-through estimator reports for the real loss.
  std::vector<double> offset;
  {
    NoGradGuard no_grad;
    const Encoding e = model.encode(actions);
    const Tensor b = fsq_bound(e.embeddings, fsq);
    for (std::size_t i = 0; i < b.numel(); ++i) offset.push_back(e.values.at(i) - b.at(i));
  }
  const Shape shape{2, model.num_tokens(), fsq.dim()};
  const Tensor frozen = Tensor::from(shape, offset);
  s.check_params("autoencoder_straight_through", model.parameters(), [&] {
    const Tensor b = fsq_bound(model.encode(actions).embeddings, fsq);
    return l1_loss(model.decode(b + frozen), actions);
  });
}

void prior_case(Suite& s) {
  PriorConfig cfg;
  cfg.vocab_size = 10;
  cfg.width = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.attn_dropout = 0.0;
  cfg.embed_dropout = 0.0;
  cfg.block_size = 3;
  cfg.obs_history = 2;
  cfg.obs_dim = 3;
  cfg.num_tasks = 2;
  cfg.ffn_mult = 2;
  SkillPrior prior(cfg, s.rng().next_u64());
  PriorInput in;
  in.task_ids = {1, 0};
  for (int i = 0; i < 12; ++i) in.observations.push_back(s.rng().normal());
  in.tokens = {3, 9, 0, 7};
  in.prefix_len = 2;
  const std::vector<int> targets{3, 9, 4, 0, 7, 7};
  s.check_params("prior_nll", prior.parameters(),
                 [&] { return prior.nll_loss(in, targets); });
}

}  // namespace

std::vector<GradCheckCase> run_grad_check_suite(std::uint64_t seed) {
  Suite suite(seed);
  primitive_cases(suite);
  autoencoder_case(suite);
  prior_case(suite);
  return suite.take();
}

}  // namespace skilltok
