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

// Checkpoint file layout:
//
//   QSTCKPT 1
//   #key=value                         (metadata, any number of lines)
//   name<TAB>f32<TAB>d0,d1,...<TAB>byte-offset
//   ...
//   <blank line>
//   little-endian float32 blobs, offsets relative to the end of the header
//
// Stage-1 files carry kind=stage1 and the full run config as config.<key>
// lines. Stage-2 files also carry the FNV-1a hash of the stage-1 file they
// were trained against.

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skilltok/autoencoder.hpp"
#include "skilltok/config.hpp"
#include "skilltok/prior.hpp"

namespace skilltok {

using MetaList = std::vector<std::pair<std::string, std::string>>;

struct Checkpoint {
  MetaList meta;
  ParamList params;

  // ConfigError if absent.
  const std::string& meta_value(std::string_view key) const;
  bool has_meta(std::string_view key) const;
};

std::string serialize_checkpoint(const MetaList& meta, const ParamList& params);
Checkpoint parse_checkpoint(std::string_view bytes);

std::string hash_hex(std::uint64_t hash);

// Config snapshot stored in a checkpoint.
RunConfig checkpoint_config(const Checkpoint& ckpt);

// Throws ConfigError naming the first architecture key on which the two
// configs differ.
void require_same_architecture(const RunConfig& expected, const RunConfig& actual);

std::string serialize_stage1(const SkillAutoencoder& model, const RunConfig& config);
SkillAutoencoder load_stage1(std::string_view bytes, RunConfig* snapshot = nullptr);

// stage1_bytes: the serialized stage-1 checkpoint the prior was trained on.
std::string serialize_stage2(const SkillPrior& prior, const RunConfig& config,
                             std::string_view stage1_bytes);
// ConfigError when the stage-1 hash or FSQ levels do not match.
SkillPrior load_stage2(std::string_view bytes, std::string_view stage1_bytes,
                       RunConfig* snapshot = nullptr);

}  // namespace skilltok
