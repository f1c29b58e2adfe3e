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

#include "skilltok/dataset_io.hpp"

#include <charconv>
#include <map>

#include "skilltok/binary_io.hpp"
#include "skilltok/errors.hpp"

namespace skilltok {
namespace {

constexpr std::string_view kMagic = "QSTD1\n";

using Kind = ParseError::Kind;

template <typename T>
T parse_number(std::string_view text, const std::string& field) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(Kind::kMalformed,
                     "dataset: bad value '" + std::string(text) + "' for " + field);
  }
  return value;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

}  // namespace

std::string serialize_dataset(const TrajectoryDataset& data) {
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> tasks;
  for (const auto& e : data.episodes) {
    const std::size_t len = e.length(data.act_dim);
    if (e.observations.size() != len * data.obs_dim ||
        e.actions.size() != len * data.act_dim) {
      throw DimensionError("dataset: episode arrays disagree with obs/act dims");
    }
    if (e.task_id < 0) throw RangeError("dataset: negative task id");
    lengths.push_back(len);
    tasks.push_back(static_cast<std::size_t>(e.task_id));
  }
  std::string out(kMagic);
  out += "version " + std::to_string(data.version) + "\n";
  out += "seed " + std::to_string(data.seed) + "\n";
  out += "episodes " + std::to_string(data.episodes.size()) + "\n";
  out += "obs_dim " + std::to_string(data.obs_dim) + "\n";
  out += "act_dim " + std::to_string(data.act_dim) + "\n";
  out += "lengths " + join(lengths) + "\n";
  out += "tasks " + join(tasks) + "\n";
  out += "\n";
  for (const auto& e : data.episodes) {
    append_f32(out, e.observations);
    append_f32(out, e.actions);
  }
  return out;
}

TrajectoryDataset parse_dataset(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) {
    throw ParseError(Kind::kBadMagic, "dataset: missing QSTD1 magic");
  }
  std::size_t pos = kMagic.size();
  std::map<std::string, std::string, std::less<>> header;
  while (true) {
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) {
      throw ParseError(Kind::kTruncated, "dataset: header ends before the blank line");
    }
    std::string_view line = bytes.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) break;
    const std::size_t space = line.find(' ');
    if (space == std::string_view::npos) {
      throw ParseError(Kind::kMalformed, "dataset: bad header line '" + std::string(line) + "'");
    }
    header.emplace(std::string(line.substr(0, space)), std::string(line.substr(space + 1)));
  }
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw ParseError(Kind::kMalformed, "dataset: missing " + key);
    return it->second;
  };

  TrajectoryDataset data;
  data.version = parse_number<std::uint32_t>(field("version"), "version");
  if (data.version != TrajectoryDataset::kVersion) {
    throw ParseError(Kind::kVersionMismatch,
                     "dataset: version " + std::to_string(data.version) + ", expected " +
                         std::to_string(TrajectoryDataset::kVersion));
  }
  data.seed = parse_number<std::uint64_t>(field("seed"), "seed");
  const auto count = parse_number<std::size_t>(field("episodes"), "episodes");
  data.obs_dim = parse_number<std::size_t>(field("obs_dim"), "obs_dim");
  data.act_dim = parse_number<std::size_t>(field("act_dim"), "act_dim");
  const auto lengths = split_list(field("lengths"));
  const auto tasks = split_list(field("tasks"));
  if (lengths.size() != count || tasks.size() != count) {
    throw ParseError(Kind::kMalformed, "dataset: episode count " + std::to_string(count) +
                                           " disagrees with lengths/tasks lists");
  }
  std::size_t expected = pos;
  std::vector<std::size_t> lens;
  for (const auto& l : lengths) {
    lens.push_back(parse_number<std::size_t>(l, "lengths"));
    expected += lens.back() * (data.obs_dim + data.act_dim) * 4;
  }
  if (bytes.size() < expected) {
    throw ParseError(Kind::kTruncated, "dataset: truncated, expected " +
                                           std::to_string(expected) + " bytes, got " +
                                           std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw ParseError(Kind::kMalformed, "dataset: " + std::to_string(bytes.size() - expected) +
                                           " trailing bytes");
  }
  for (std::size_t i = 0; i < count; ++i) {
    Episode e;
    e.task_id = parse_number<int>(tasks[i], "tasks");
    e.observations = read_f32(bytes, pos, lens[i] * data.obs_dim);
    pos += lens[i] * data.obs_dim * 4;
    e.actions = read_f32(bytes, pos, lens[i] * data.act_dim);
    pos += lens[i] * data.act_dim * 4;
    data.episodes.push_back(std::move(e));
  }
  return data;
}

void write_dataset(const std::string& path, const TrajectoryDataset& data) {
  write_file(path, serialize_dataset(data));
}

TrajectoryDataset read_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

}  // namespace skilltok
