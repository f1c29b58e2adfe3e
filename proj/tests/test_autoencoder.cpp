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

#include <algorithm>
#include <cmath>

#include "skilltok/autoencoder.hpp"
#include "skilltok/errors.hpp"
#include "skilltok/grad_check.hpp"
#include "skilltok/ops.hpp"
#include "skilltok/training.hpp"
#include "test_util.hpp"

namespace skilltok {
namespace {

using testing::random_tensor;
using testing::values;

EncoderConfig small_encoder(bool causal = true) {
  EncoderConfig e;
  e.width = 16;
  e.layers = 2;
  e.heads = 2;
  e.attn_dropout = 0.0;
  e.causal = causal;
  return e;
}

DecoderConfig small_decoder(bool causal = true) {
  DecoderConfig d;
  d.width = 16;
  d.layers = 2;
  d.heads = 2;
  d.attn_dropout = 0.0;
  d.causal_self_attention = causal;
  return d;
}

SkillAutoencoder small_model(std::uint64_t seed, bool enc_causal = true, bool dec_causal = true) {
  return SkillAutoencoder(small_encoder(enc_causal), small_decoder(dec_causal), FsqSpec(), seed);
}

TEST(EncoderConfig, TokenCountAndValidation) {
  EncoderConfig e;
  EXPECT_EQ(e.downsample(), 4u);
  EXPECT_EQ(e.num_tokens(), 8u);
  e.seq_len = 30;
  EXPECT_THROW(e.validate(), ConfigError);
}

TEST(Autoencoder, EncodeShapes) {
  const auto model = small_model(1);
  Rng rng(1);
  const Encoding enc = model.encode(random_tensor({3, 32, 2}, rng, 0.03));
  EXPECT_EQ(enc.embeddings.shape(), (Shape{3, 8, 4}));
  EXPECT_EQ(enc.indices.size(), 24u);
  EXPECT_THROW(model.encode(random_tensor({3, 31, 2}, rng)), DimensionError);
  EXPECT_THROW(model.encode(random_tensor({3, 32, 3}, rng)), DimensionError);
}

TEST(Autoencoder, LastActionOnlyReachesLastToken) {
  const auto model = small_model(2);
  Rng rng(2);
  const Tensor a = random_tensor({1, 32, 2}, rng, 0.03);
  Tensor b = a.clone();
  b.mutable_data()[31 * 2] += 0.05;
  const auto ea = values(model.encode(a).embeddings);
  const auto eb = values(model.encode(b).embeddings);
  for (std::size_t i = 0; i < 7 * 4; ++i) EXPECT_EQ(ea[i], eb[i]) << i;
}

TEST(Autoencoder, CausalTokensIgnoreLaterActions) {
  const auto model = small_model(3);
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor a = random_tensor({1, 32, 2}, rng, 0.03);
    const std::size_t t = rng.below(32);
    Tensor b = a.clone();
    b.mutable_data()[t * 2 + rng.below(2)] += 0.1;
    const auto ea = values(model.encode(a).embeddings);
    const auto eb = values(model.encode(b).embeddings);
    for (std::size_t j = 0; j * 4 < t; ++j) {
      for (std::size_t c = 0; c < 4; ++c) ASSERT_EQ(ea[j * 4 + c], eb[j * 4 + c]);
    }
  }
}

TEST(Autoencoder, SharedPrefixSharesTokensOnlyWhenCausal) {
  Rng rng(4);
  const Tensor a = random_tensor({1, 32, 2}, rng, 0.03);
  Tensor b = a.clone();
  for (std::size_t i = 32; i < 64; ++i) b.mutable_data()[i] = rng.normal(0.0, 0.03);
  const auto causal = small_model(5, true);
  const auto ia = causal.encode(a).indices;
  const auto ib = causal.encode(b).indices;
  EXPECT_TRUE(std::equal(ia.begin(), ia.begin() + 4, ib.begin()));
  const auto open = small_model(5, false);
  const auto ea = values(open.encode(a).embeddings);
  const auto eb = values(open.encode(b).embeddings);
  bool differs = false;
  for (std::size_t i = 0; i < 16; ++i) differs |= ea[i] != eb[i];
  EXPECT_TRUE(differs);
}

TEST(Autoencoder, DecoderSelfAttentionIsCausal) {
  Rng rng(6);
  const Tensor v = indices_to_values(std::vector<int>{1, 50, 999, 3, 400, 7, 0, 123}, FsqSpec());
  const Tensor tokens = reshape(v, {1, 8, 4});
  const Tensor q = random_tensor({1, 32, 16}, rng);
  Tensor qp = q.clone();
  for (std::size_t c = 0; c < 16; ++c) qp.mutable_data()[20 * 16 + c] += rng.normal();
  for (bool causal : {true, false}) {
    const auto model = small_model(7, true, causal);
    const auto a = values(model.decode(tokens, q));
    const auto b = values(model.decode(tokens, qp));
    bool earlier_changed = false;
    for (std::size_t i = 0; i < 20 * 2; ++i) earlier_changed |= a[i] != b[i];
    EXPECT_EQ(earlier_changed, !causal);
  }
}

TEST(Autoencoder, UntrainedDecodeIsFinite) {
  const auto model = small_model(8);
  const std::vector<int> codes{0, 1, 2, 3, 996, 997, 998, 999};
  const Tensor out = model.decode_indices(codes);
  EXPECT_EQ(out.shape(), (Shape{1, 32, 2}));
  for (double x : out.data()) EXPECT_TRUE(std::isfinite(x));
  const std::vector<int> bad{0, 1, 2, 3, 4, 5, 6, 1000};
  EXPECT_THROW(model.decode_indices(bad), RangeError);
}

TEST(Autoencoder, SwappingTwoTokensChangesThePlan) {
  const auto model = small_model(11);
  const std::vector<int> codes{5, 120, 999, 3, 400, 77, 0, 640};
  std::vector<int> swapped = codes;
  std::swap(swapped[1], swapped[5]);
  EXPECT_NE(values(model.decode_indices(codes)), values(model.decode_indices(swapped)));
}

TEST(Autoencoder, ExactDecoderGivesZeroLoss) {
  const auto model = small_model(12);
  for (const auto& p : model.decoder_parameters()) {
    if (p.name.rfind("decoder.action_head.", 0) == 0) {
      Tensor t = p.tensor;
      std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0);
    }
  }
  EXPECT_EQ(model.recon_loss(Tensor::zeros({3, 32, 2})).item(), 0.0);
}

TEST(Autoencoder, LossIgnoresBatchOrder) {
  const auto model = small_model(9);
  Rng rng(9);
  const Tensor a = random_tensor({2, 32, 2}, rng, 0.03);
  std::vector<double> swapped(a.data().begin() + 64, a.data().end());
  swapped.insert(swapped.end(), a.data().begin(), a.data().begin() + 64);
  EXPECT_NEAR(model.recon_loss(a).item(),
              model.recon_loss(Tensor::from({2, 32, 2}, swapped)).item(), 1e-15);
}

TEST(Autoencoder, StraightThroughGradientCheck) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& c : run_grad_check_suite(seed)) {
      if (c.name == "autoencoder_straight_through") {
        EXPECT_LT(c.max_relative_error, 1e-4);
      }
    }
  }
}

TEST(Autoencoder, CloneIsIndependent) {
  const auto model = small_model(10);
  auto copy = model.clone();
  EXPECT_EQ(values(copy.parameters()[0].tensor), values(model.parameters()[0].tensor));
  copy.parameters()[0].tensor.mutable_data()[0] += 1.0;
  EXPECT_NE(copy.parameters()[0].tensor.at(0), model.parameters()[0].tensor.at(0));
}

ActionWindows random_windows(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  ActionWindows w;
  w.window = 32;
  w.act_dim = 2;
  for (std::size_t i = 0; i < count; ++i) {
    const double dx = rng.normal(0.0, 0.03);
    const double dy = rng.normal(0.0, 0.03);
    for (int t = 0; t < 32; ++t) {
      w.values.push_back(dx);
      w.values.push_back(dy);
    }
  }
  return w;
}

TEST(Stage1Training, OneEpochReducesLoss) {
  const auto windows = random_windows(10, 11);
  TrainConfig train;
  train.epochs = 1;
  train.steps_per_epoch = 20;
  train.batch_size = 10;
  train.learning_rate = 3e-3;
  const SkillAutoencoder init(small_encoder(), small_decoder(), FsqSpec(), 12);
  const auto trained =
      train_stage1(windows, small_encoder(), small_decoder(), FsqSpec(), train, 12);
  EXPECT_LT(reconstruction_error(trained, windows), reconstruction_error(init, windows));
}

TEST(Stage1Training, SameSeedSameParameters) {
  const auto windows = random_windows(16, 13);
  TrainConfig train;
  train.steps_per_epoch = 3;
  train.batch_size = 8;
  std::vector<double> losses[2];
  auto run = [&](int r) {
    return train_stage1(windows, small_encoder(), small_decoder(), FsqSpec(), train, 5,
                        [&](const MetricsRecord& m) { losses[r].push_back(m.loss); });
  };
  const auto a = run(0);
  const auto b = run(1);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(values(pa[i].tensor), values(pb[i].tensor)) << pa[i].name;
  }
  EXPECT_EQ(losses[0], losses[1]);
}

TEST(Stage1Training, EmptyDatasetIsArgumentError) {
  ActionWindows empty;
  empty.window = 32;
  empty.act_dim = 2;
  EXPECT_THROW(train_stage1(empty, small_encoder(), small_decoder(), FsqSpec(), {}, 0),
               ArgumentError);
}

}  // namespace
}  // namespace skilltok
