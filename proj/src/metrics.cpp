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

#include "skilltok/metrics.hpp"

#include <json.hpp>

#include "skilltok/errors.hpp"

namespace skilltok {

std::string to_json_line(const MetricsRecord& record) {
  nlohmann::ordered_json j;
  j["phase"] = record.phase;
  j["epoch"] = record.epoch;
  j["loss"] = record.loss;
  if (record.codebook_utilization) j["codebook_utilization"] = *record.codebook_utilization;
  if (record.success_rate) j["success_rate"] = *record.success_rate;
  if (record.task_id) j["task_id"] = *record.task_id;
  j["seed"] = record.seed;
  return j.dump();
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path, std::ios::app) {
  if (!out_) throw Error("cannot open metrics file '" + path + "'");
}

void MetricsWriter::write(const MetricsRecord& record) {
  out_ << to_json_line(record) << '\n';
  out_.flush();
}

MetricsSink MetricsWriter::sink() {
  return [this](const MetricsRecord& r) { write(r); };
}

}  // namespace skilltok
