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
#include <fstream>

#include "skilltok/config.hpp"
#include "skilltok/errors.hpp"
#include "test_util.hpp"

namespace skilltok {
namespace {

TEST(Config, DefaultsFollowPublishedHyperparameters) {
  const RunConfig cfg;
  EXPECT_EQ(cfg.window, 32u);
  EXPECT_EQ(cfg.encoder_config().num_tokens(), 8u);
  EXPECT_EQ(cfg.fsq_levels, (std::vector<std::size_t>{8, 5, 5, 5}));
  EXPECT_EQ(cfg.fsq_spec().codebook_size(), 1000u);
  EXPECT_EQ(cfg.encoder_width, 256u);
  EXPECT_EQ(cfg.encoder_strides, (std::vector<std::size_t>{2, 2, 1}));
  EXPECT_EQ(cfg.encoder_kernels, (std::vector<std::size_t>{5, 3, 3}));
  EXPECT_EQ(cfg.decoder_layers, 4u);
  EXPECT_EQ(cfg.prior_layers, 6u);
  EXPECT_EQ(cfg.prior_heads, 6u);
  EXPECT_EQ(cfg.prior_width, 384u);
  EXPECT_DOUBLE_EQ(cfg.prior_attn_dropout, 0.1);
  EXPECT_DOUBLE_EQ(cfg.prior_embed_dropout, 0.1);
  EXPECT_EQ(cfg.top_k, 5u);
  EXPECT_DOUBLE_EQ(cfg.temperature, 1.0);
  EXPECT_DOUBLE_EQ(cfg.decoder_loss_scale, 10.0);
  EXPECT_EQ(cfg.execution_horizon, 8u);
  EXPECT_EQ(cfg.obs_history, 1u);
  EXPECT_DOUBLE_EQ(cfg.learning_rate, 1e-4);
  EXPECT_EQ(cfg.batch_size, 64u);
  EXPECT_TRUE(cfg.encoder_causal);
  EXPECT_TRUE(cfg.decoder_causal);
}

TEST(Config, DerivedConfigsAgree) {
  const RunConfig cfg;
  const PriorConfig prior = cfg.prior_config(9);
  EXPECT_EQ(prior.vocab_size, cfg.fsq_spec().codebook_size());
  EXPECT_EQ(prior.block_size, cfg.encoder_config().num_tokens());
  EXPECT_EQ(prior.num_tasks, 9u);
  EXPECT_EQ(cfg.control_config().sampler.top_k, 5u);
  EXPECT_EQ(cfg.finetune_config().loss_scale, 10.0);
  EXPECT_EQ(cfg.stage1_train().batch_size, 64u);
}

TEST(Config, TextRoundTrip) {
  RunConfig cfg;
  cfg.set("prior.width", "48");
  cfg.set("fsq.levels", "7,5,3");
  cfg.set("optim.learning_rate", "0.00125");
  cfg.set("encoder.causal", "off");
  const RunConfig back = parse_config(cfg.to_text());
  EXPECT_EQ(back.to_text(), cfg.to_text());
  EXPECT_EQ(back.prior_width, 48u);
  EXPECT_EQ(back.fsq_levels, (std::vector<std::size_t>{7, 5, 3}));
  EXPECT_DOUBLE_EQ(back.learning_rate, 0.00125);
  EXPECT_FALSE(back.encoder_causal);
}

TEST(Config, EveryKeyDocumentedAndReadable) {
  const RunConfig cfg;
  for (const auto& key : config_keys()) {
    EXPECT_FALSE(key.doc.empty()) << key.name;
    EXPECT_FALSE(cfg.get(key.name).empty()) << key.name;
  }
  const std::string text = cfg.to_text();
  EXPECT_EQ(config_keys().size(),
            static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')));
}

TEST(Config, CommentsAndBlankLinesAreIgnored) {
  const RunConfig cfg = parse_config("# header\n\n  seed = 12  \n#window = 3\n");
  EXPECT_EQ(cfg.seed, 12u);
  EXPECT_EQ(cfg.window, 32u);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("no_such_key = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("seed = -1\n"), ConfigError);
  EXPECT_THROW(parse_config("optim.learning_rate = fast\n"), ConfigError);
  EXPECT_THROW(parse_config("encoder.causal = maybe\n"), ConfigError);
  EXPECT_THROW(parse_config("fsq.levels = \n"), ConfigError);
  try {
    parse_config("seed = 1\njust words\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(RunConfig().get("nope"), ConfigError);
}

TEST(Config, LoadFromFile) {
  const auto dir = testing::scratch_dir("config");
  std::ofstream((dir / "run.cfg").string()) << "seed = 5\nsampler.top_k = 1\n";
  const RunConfig cfg = load_config((dir / "run.cfg").string());
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.top_k, 1u);
  EXPECT_THROW(load_config((dir / "absent.cfg").string()), Error);
}

}  // namespace
}  // namespace skilltok
