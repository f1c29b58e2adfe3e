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

// Little-endian float32 blobs and whole-file helpers shared by the dataset
// and checkpoint formats.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace skilltok {

void append_f32(std::string& out, std::span<const double> values);
// Reads count float32 values starting at bytes[offset].
std::vector<double> read_f32(std::string_view bytes, std::size_t offset, std::size_t count);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

// Splits "a,b,c" (empty string -> empty list).
std::vector<std::string> split_list(std::string_view text, char sep = ',');

}  // namespace skilltok
