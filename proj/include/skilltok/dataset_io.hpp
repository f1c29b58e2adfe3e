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

// Dataset file layout:
//
//   QSTD1
//   version 1
//   seed <u64>
//   episodes <count>
//   obs_dim <n>
//   act_dim <n>
//   lengths <l0>,<l1>,...
//   tasks <id0>,<id1>,...
//   <blank line>
//   per episode: observations then actions, little-endian float32, row-major
//
// Values are stored as float32; anything else in memory is rounded on write.

#include <string>
#include <string_view>

#include "skilltok/tasks.hpp"

namespace skilltok {

std::string serialize_dataset(const TrajectoryDataset& data);
TrajectoryDataset parse_dataset(std::string_view bytes);

void write_dataset(const std::string& path, const TrajectoryDataset& data);
TrajectoryDataset read_dataset(const std::string& path);

}  // namespace skilltok
