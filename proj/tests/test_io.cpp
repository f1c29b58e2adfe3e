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

#include "skilltok/binary_io.hpp"
#include "skilltok/checkpoint.hpp"
#include "skilltok/dataset_io.hpp"
#include "skilltok/errors.hpp"
#include "skilltok/training.hpp"
#include "test_util.hpp"

namespace skilltok {
namespace {

using Kind = ParseError::Kind;

Kind parse_kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no ParseError";
  return Kind::kMalformed;
}

TrajectoryDataset small_dataset() { return generate_suite(4, pretraining_suite(2)); }

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.encoder_width = 8;
  cfg.encoder_layers = 1;
  cfg.encoder_heads = 2;
  cfg.decoder_width = 8;
  cfg.decoder_layers = 1;
  cfg.decoder_heads = 2;
  cfg.prior_width = 12;
  cfg.prior_layers = 1;
  cfg.prior_heads = 2;
  return cfg;
}

TEST(BinaryIo, Float32RoundTrip) {
  std::string bytes;
  const std::vector<double> v{0.0, -1.5, 0.1, 3.25e-7};
  append_f32(bytes, v);
  ASSERT_EQ(bytes.size(), 16u);
  const auto back = read_f32(bytes, 0, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(v[i])));
  }
  EXPECT_EQ(parse_kind_of([&] { read_f32(bytes, 4, 4); }), Kind::kTruncated);
}

TEST(DatasetIo, RoundTripIsBitwise) {
  const auto data = small_dataset();
  const std::string bytes = serialize_dataset(data);
  const auto back = parse_dataset(bytes);
  EXPECT_EQ(serialize_dataset(back), bytes);
  ASSERT_EQ(back.episodes.size(), data.episodes.size());
  EXPECT_EQ(back.seed, 4u);
  // Generated values sit on a float32-exact grid, so nothing is lost.
  for (std::size_t i = 0; i < data.episodes.size(); ++i) {
    EXPECT_EQ(back.episodes[i].actions, data.episodes[i].actions);
    EXPECT_EQ(back.episodes[i].observations, data.episodes[i].observations);
    EXPECT_EQ(back.episodes[i].task_id, data.episodes[i].task_id);
  }
}

TEST(DatasetIo, FileRoundTrip) {
  const auto dir = testing::scratch_dir("dataset_io");
  const auto data = small_dataset();
  write_dataset((dir / "d.qstd").string(), data);
  EXPECT_EQ(serialize_dataset(read_dataset((dir / "d.qstd").string())), serialize_dataset(data));
  EXPECT_THROW(read_dataset((dir / "missing.qstd").string()), Error);
}

TEST(DatasetIo, DistinctErrors) {
  const std::string bytes = serialize_dataset(small_dataset());
  EXPECT_EQ(parse_kind_of([&] { parse_dataset("QSTX1\n" + bytes.substr(6)); }), Kind::kBadMagic);
  std::string old = bytes;
  old.replace(old.find("version 1"), 9, "version 2");
  EXPECT_EQ(parse_kind_of([&] { parse_dataset(old); }), Kind::kVersionMismatch);
  EXPECT_EQ(parse_kind_of([&] { parse_dataset(bytes + "x"); }), Kind::kMalformed);
  const std::string cut = bytes.substr(0, bytes.size() - 10);
  try {
    parse_dataset(cut);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), Kind::kTruncated);
    const std::string msg = e.what();
    EXPECT_NE(msg.find(std::to_string(bytes.size())), std::string::npos) << msg;
    EXPECT_NE(msg.find(std::to_string(cut.size())), std::string::npos) << msg;
  }
}

TEST(DatasetIo, EmptyDatasetIsValidButUntrainable) {
  TrajectoryDataset empty;
  const auto back = parse_dataset(serialize_dataset(empty));
  EXPECT_TRUE(back.episodes.empty());
  const RunConfig cfg = tiny_config();
  EXPECT_THROW(train_stage1(extract_action_windows(back, 32), cfg.encoder_config(),
                            cfg.decoder_config(), cfg.fsq_spec(), {}, 0),
               ArgumentError);
}

TEST(CheckpointIo, Stage1RoundTrip) {
  const RunConfig cfg = tiny_config();
  const SkillAutoencoder model(cfg.encoder_config(), cfg.decoder_config(), cfg.fsq_spec(), 3);
  const std::string bytes = serialize_stage1(model, cfg);
  EXPECT_EQ(bytes.rfind("QSTCKPT 1\n", 0), 0u);
  RunConfig snapshot;
  const auto back = load_stage1(bytes, &snapshot);
  EXPECT_EQ(serialize_stage1(back, snapshot), bytes);
  EXPECT_EQ(snapshot.to_text(), cfg.to_text());
  const auto a = model.parameters();
  const auto b = back.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].name, b[i].name);
    for (std::size_t k = 0; k < a[i].tensor.numel(); ++k) {
      ASSERT_EQ(static_cast<float>(a[i].tensor.at(k)), b[i].tensor.at(k));
    }
  }
}

TEST(CheckpointIo, Stage2ChecksStage1Identity) {
  const RunConfig cfg = tiny_config();
  const SkillAutoencoder m1(cfg.encoder_config(), cfg.decoder_config(), cfg.fsq_spec(), 1);
  const SkillAutoencoder m2(cfg.encoder_config(), cfg.decoder_config(), cfg.fsq_spec(), 2);
  const std::string s1 = serialize_stage1(m1, cfg);
  const std::string s1_other = serialize_stage1(m2, cfg);
  const SkillPrior prior(cfg.prior_config(8), 5);
  const std::string s2 = serialize_stage2(prior, cfg, s1);
  RunConfig snapshot;
  const auto back = load_stage2(s2, s1, &snapshot);
  EXPECT_EQ(back.num_tasks(), 8u);
  EXPECT_EQ(serialize_stage2(back, snapshot, s1), s2);
  EXPECT_THROW(load_stage2(s2, s1_other), ConfigError);
  EXPECT_THROW(load_stage1(s2), ConfigError);

  RunConfig coarse = cfg;
  coarse.fsq_levels = {5, 5};
  const SkillAutoencoder m3(coarse.encoder_config(), coarse.decoder_config(), coarse.fsq_spec(),
                            1);
  const std::string s1_coarse = serialize_stage1(m3, coarse);
  EXPECT_THROW(load_stage2(s2, s1_coarse), ConfigError);
  EXPECT_THROW(serialize_stage2(prior, cfg, s1_coarse), ConfigError);
}

TEST(CheckpointIo, DistinctErrors) {
  const RunConfig cfg = tiny_config();
  const SkillAutoencoder model(cfg.encoder_config(), cfg.decoder_config(), cfg.fsq_spec(), 3);
  const std::string bytes = serialize_stage1(model, cfg);
  EXPECT_EQ(parse_kind_of([&] { parse_checkpoint("QSTD1\n"); }), Kind::kBadMagic);
  EXPECT_EQ(parse_kind_of([&] { parse_checkpoint("QSTCKPT 2\n" + bytes.substr(10)); }),
            Kind::kVersionMismatch);
  EXPECT_EQ(parse_kind_of([&] { parse_checkpoint(bytes.substr(0, bytes.size() - 3)); }),
            Kind::kTruncated);
  EXPECT_EQ(parse_kind_of([&] { parse_checkpoint("QSTCKPT 1\nw\tf64\t2\t0\n\n"); }),
            Kind::kMalformed);
}

TEST(CheckpointIo, ArchitectureMismatchNamesKey) {
  RunConfig a = tiny_config();
  RunConfig b = a;
  b.seed = 99;
  b.learning_rate = 0.5;
  EXPECT_NO_THROW(require_same_architecture(a, b));
  b.prior_layers = 3;
  try {
    require_same_architecture(a, b);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("prior.layers"), std::string::npos);
  }
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(hash_hex(0xabcull), "0000000000000abc");
}

}  // namespace
}  // namespace skilltok
