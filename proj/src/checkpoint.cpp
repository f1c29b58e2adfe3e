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

#include "skilltok/checkpoint.hpp"

#include <charconv>
#include <cstdio>

#include "skilltok/binary_io.hpp"
#include "skilltok/errors.hpp"

namespace skilltok {
namespace {

constexpr std::string_view kMagic = "QSTCKPT 1\n";
constexpr std::string_view kConfigPrefix = "config.";

using Kind = ParseError::Kind;

std::size_t parse_size(std::string_view text, const char* what) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ParseError(Kind::kMalformed,
                     std::string("checkpoint: bad ") + what + " '" + std::string(text) + "'");
  }
  return v;
}

std::string levels_text(const FsqSpec& spec) {
  std::string s;
  for (std::size_t i = 0; i < spec.dim(); ++i) {
    if (i) s += ',';
    s += std::to_string(spec.levels()[i]);
  }
  return s;
}

MetaList config_meta(const RunConfig& config) {
  MetaList meta;
  for (const auto& key : config_keys()) {
    meta.emplace_back(std::string(kConfigPrefix) + key.name, config.get(key.name));
  }
  return meta;
}

Checkpoint parse_kind(std::string_view bytes, std::string_view kind) {
  Checkpoint c = parse_checkpoint(bytes);
  if (c.meta_value("kind") != kind) {
    throw ConfigError("checkpoint is a '" + c.meta_value("kind") + "' checkpoint, expected '" +
                      std::string(kind) + "'");
  }
  return c;
}

}  // namespace

const std::string& Checkpoint::meta_value(std::string_view key) const {
  for (const auto& [k, v] : meta) {
    if (k == key) return v;
  }
  throw ConfigError("checkpoint has no '" + std::string(key) + "' entry");
}

bool Checkpoint::has_meta(std::string_view key) const {
  for (const auto& kv : meta) {
    if (kv.first == key) return true;
  }
  return false;
}

std::string serialize_checkpoint(const MetaList& meta, const ParamList& params) {
  std::string out(kMagic);
  for (const auto& [k, v] : meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw ArgumentError("checkpoint metadata '" + k + "' contains a separator");
    }
    out += "#" + k + "=" + v + "\n";
  }
  std::size_t offset = 0;
  for (const auto& p : params) {
    std::string dims;
    for (std::size_t i = 0; i < p.tensor.rank(); ++i) {
      if (i) dims += ',';
      dims += std::to_string(p.tensor.dim(i));
    }
    out += p.name + "\tf32\t" + dims + "\t" + std::to_string(offset) + "\n";
    offset += p.tensor.numel() * 4;
  }
  out += "\n";
  for (const auto& p : params) append_f32(out, p.tensor.data());
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) {
    if (bytes.substr(0, 8) == "QSTCKPT ") {
      throw ParseError(Kind::kVersionMismatch, "checkpoint: unsupported version line");
    }
    throw ParseError(Kind::kBadMagic, "checkpoint: missing 'QSTCKPT 1' magic");
  }
  struct Entry {
    std::string name;
    Shape shape;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  Checkpoint c;
  std::size_t pos = kMagic.size();
  while (true) {
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) {
      throw ParseError(Kind::kTruncated, "checkpoint: header ends before the blank line");
    }
    const std::string_view line = bytes.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) break;
    if (line.front() == '#') {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError(Kind::kMalformed, "checkpoint: bad metadata line");
      }
      c.meta.emplace_back(std::string(line.substr(1, eq - 1)), std::string(line.substr(eq + 1)));
      continue;
    }
    const auto fields = split_list(line, '\t');
    if (fields.size() != 4 || fields[1] != "f32") {
      throw ParseError(Kind::kMalformed,
                       "checkpoint: bad parameter line '" + std::string(line) + "'");
    }
    Entry e{fields[0], {}, parse_size(fields[3], "offset")};
    for (const auto& d : split_list(fields[2])) e.shape.push_back(parse_size(d, "dimension"));
    entries.push_back(std::move(e));
  }
  std::size_t expected = pos;
  for (const auto& e : entries) {
    expected = std::max(expected, pos + e.offset + numel_of(e.shape) * 4);
  }
  if (bytes.size() < expected) {
    throw ParseError(Kind::kTruncated, "checkpoint: truncated, expected " +
                                           std::to_string(expected) + " bytes, got " +
                                           std::to_string(bytes.size()));
  }
  for (const auto& e : entries) {
    c.params.push_back(
        {e.name, Tensor::from(e.shape, read_f32(bytes, pos + e.offset, numel_of(e.shape)))});
  }
  return c;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

RunConfig checkpoint_config(const Checkpoint& ckpt) {
  RunConfig cfg;
  for (const auto& [k, v] : ckpt.meta) {
    if (k.rfind(kConfigPrefix, 0) == 0) cfg.set(k.substr(kConfigPrefix.size()), v);
  }
  return cfg;
}

void require_same_architecture(const RunConfig& expected, const RunConfig& actual) {
  for (const auto& key : config_keys()) {
    const std::string& k = key.name;
    const bool arch = k == "window" || k == "ffn_mult" || k.rfind("fsq.", 0) == 0 ||
                      k.rfind("encoder.", 0) == 0 || k.rfind("decoder.", 0) == 0 ||
                      k.rfind("prior.", 0) == 0;
    if (arch && expected.get(k) != actual.get(k)) {
      throw ConfigError("config/checkpoint mismatch on '" + k + "': config has " +
                        expected.get(k) + ", checkpoint has " + actual.get(k));
    }
  }
}

std::string serialize_stage1(const SkillAutoencoder& model, const RunConfig& config) {
  MetaList meta{{"kind", "stage1"}, {"fsq_levels", levels_text(model.fsq())}};
  for (auto& kv : config_meta(config)) meta.push_back(std::move(kv));
  return serialize_checkpoint(meta, model.parameters());
}

SkillAutoencoder load_stage1(std::string_view bytes, RunConfig* snapshot) {
  const Checkpoint c = parse_kind(bytes, "stage1");
  const RunConfig cfg = checkpoint_config(c);
  SkillAutoencoder model(cfg.encoder_config(), cfg.decoder_config(), cfg.fsq_spec(), 0);
  if (levels_text(model.fsq()) != c.meta_value("fsq_levels")) {
    throw ConfigError("stage-1 checkpoint FSQ levels disagree with its config");
  }
  load_parameters(model.parameters(), c.params);
  if (snapshot) *snapshot = cfg;
  return model;
}

std::string serialize_stage2(const SkillPrior& prior, const RunConfig& config,
                             std::string_view stage1_bytes) {
  const Checkpoint s1 = parse_kind(stage1_bytes, "stage1");
  if (checkpoint_config(s1).fsq_spec().codebook_size() != prior.config().vocab_size) {
    throw ConfigError("prior vocabulary does not match the stage-1 codebook");
  }
  MetaList meta{{"kind", "stage2"},
                {"fsq_levels", s1.meta_value("fsq_levels")},
                {"stage1_hash", hash_hex(fnv1a(stage1_bytes))},
                {"num_tasks", std::to_string(prior.num_tasks())}};
  for (auto& kv : config_meta(config)) meta.push_back(std::move(kv));
  return serialize_checkpoint(meta, prior.parameters());
}

SkillPrior load_stage2(std::string_view bytes, std::string_view stage1_bytes,
                       RunConfig* snapshot) {
  const Checkpoint c = parse_kind(bytes, "stage2");
  const Checkpoint s1 = parse_kind(stage1_bytes, "stage1");
  if (c.meta_value("fsq_levels") != s1.meta_value("fsq_levels")) {
    throw ConfigError("stage-2 FSQ levels " + c.meta_value("fsq_levels") +
                      " do not match stage-1 levels " + s1.meta_value("fsq_levels"));
  }
  const std::string actual = hash_hex(fnv1a(stage1_bytes));
  if (c.meta_value("stage1_hash") != actual) {
    throw ConfigError("stage-2 checkpoint was trained against stage-1 " +
                      c.meta_value("stage1_hash") + ", got " + actual);
  }
  const RunConfig cfg = checkpoint_config(c);
  const std::size_t tasks = std::stoul(c.meta_value("num_tasks"));
  SkillPrior prior(cfg.prior_config(tasks), 0);
  load_parameters(prior.parameters(), c.params);
  if (snapshot) *snapshot = cfg;
  return prior;
}

}  // namespace skilltok
