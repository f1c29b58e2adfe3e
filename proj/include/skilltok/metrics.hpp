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

#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

namespace skilltok {

struct MetricsRecord {
  std::string phase;
  std::size_t epoch = 0;
  double loss = 0.0;
  std::optional<double> codebook_utilization;
  std::optional<double> success_rate;
  std::optional<int> task_id;
  std::uint64_t seed = 0;
};

using MetricsSink = std::function<void(const MetricsRecord&)>;

// One JSON object, no trailing newline. Keys with no value are omitted.
std::string to_json_line(const MetricsRecord& record);

// Appends records to a JSON-lines file, one object per line.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void write(const MetricsRecord& record);
  MetricsSink sink();

 private:
  std::ofstream out_;
};

}  // namespace skilltok
