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

#include "skilltok/config.hpp"

#include <charconv>
#include <cstdio>
#include <variant>

#include "skilltok/binary_io.hpp"
#include "skilltok/errors.hpp"

namespace skilltok {
namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>,
              "the seed is registered as a size_t key");

using Member = std::variant<std::size_t RunConfig::*, double RunConfig::*, bool RunConfig::*,
                            std::vector<std::size_t> RunConfig::*>;

struct Entry {
  const char* name;
  Member member;
  const char* doc;
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      {"seed", &RunConfig::seed, "run seed; every random stream derives from it"},
      {"window", &RunConfig::window, "action chunk length T"},
      {"fsq.levels", &RunConfig::fsq_levels, "FSQ levels per latent dimension"},
      {"encoder.kernels", &RunConfig::encoder_kernels, "conv kernel sizes"},
      {"encoder.strides", &RunConfig::encoder_strides, "conv strides; product is F"},
      {"encoder.width", &RunConfig::encoder_width, "encoder model width"},
      {"encoder.layers", &RunConfig::encoder_layers, "encoder self-attention layers"},
      {"encoder.heads", &RunConfig::encoder_heads, "encoder attention heads"},
      {"encoder.dropout", &RunConfig::encoder_dropout, "encoder attention dropout"},
      {"encoder.causal", &RunConfig::encoder_causal, "causal convs and attention mask"},
      {"decoder.width", &RunConfig::decoder_width, "decoder model width"},
      {"decoder.layers", &RunConfig::decoder_layers, "decoder blocks"},
      {"decoder.heads", &RunConfig::decoder_heads, "decoder attention heads"},
      {"decoder.dropout", &RunConfig::decoder_dropout, "decoder attention dropout"},
      {"decoder.causal", &RunConfig::decoder_causal, "causal mask over decoder queries"},
      {"ffn_mult", &RunConfig::ffn_mult, "feed-forward hidden size / width"},
      {"prior.width", &RunConfig::prior_width, "prior model width"},
      {"prior.layers", &RunConfig::prior_layers, "prior transformer blocks"},
      {"prior.heads", &RunConfig::prior_heads, "prior attention heads"},
      {"prior.attn_dropout", &RunConfig::prior_attn_dropout, "prior attention dropout"},
      {"prior.embed_dropout", &RunConfig::prior_embed_dropout, "prior embedding dropout"},
      {"prior.obs_history", &RunConfig::obs_history, "observation tokens in context (h)"},
      {"prior.obs_hidden", &RunConfig::prior_obs_hidden,
       "observation MLP hidden width, 0 = prior.width"},
      {"sampler.top_k", &RunConfig::top_k, "top-k cut-off when sampling skills"},
      {"sampler.temperature", &RunConfig::temperature, "sampling temperature"},
      {"control.execution_horizon", &RunConfig::execution_horizon,
       "actions executed per plan (T_a)"},
      {"control.max_steps", &RunConfig::max_episode_steps, "episode step limit"},
      {"finetune.decoder", &RunConfig::decoder_finetune, "also finetune the decoder"},
      {"finetune.loss_scale", &RunConfig::decoder_loss_scale, "weight of the decoder l1 term"},
      {"optim.learning_rate", &RunConfig::learning_rate, "Adam learning rate"},
      {"optim.batch_size", &RunConfig::batch_size, "windows per step"},
      {"optim.grad_clip", &RunConfig::grad_clip, "global gradient-norm clip, 0 = off"},
      {"optim.cosine_decay", &RunConfig::cosine_decay, "cosine learning-rate decay to 0"},
      {"stage1.epochs", &RunConfig::stage1_epochs, "autoencoder epochs"},
      {"stage1.steps_per_epoch", &RunConfig::stage1_steps_per_epoch,
       "steps per epoch, 0 = one pass over the windows"},
      {"stage2.epochs", &RunConfig::stage2_epochs, "prior epochs"},
      {"stage2.steps_per_epoch", &RunConfig::stage2_steps_per_epoch,
       "steps per epoch, 0 = one pass"},
      {"finetune.epochs", &RunConfig::finetune_epochs, "few-shot epochs"},
      {"finetune.steps_per_epoch", &RunConfig::finetune_steps_per_epoch,
       "steps per epoch, 0 = one pass"},
      {"data.demos_per_task", &RunConfig::demos_per_task, "demonstrations per training task"},
      {"data.fewshot_demos", &RunConfig::fewshot_demos, "demonstrations of the held-out task"},
      {"eval.episodes", &RunConfig::eval_episodes, "rollouts per task and seed"},
  };
  return entries;
}

const Entry& find(std::string_view key) {
  for (const auto& e : registry()) {
    if (key == e.name) return e;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_integer(std::string_view key, std::string_view text) {
  T v{};
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ConfigError("config '" + std::string(key) + "': expected a non-negative integer, got '" +
                      std::string(text) + "'");
  }
  return v;
}

double parse_double(std::string_view key, std::string_view text) {
  // from_chars for double is missing from older libstdc++; strtod is fine here.
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError("config '" + std::string(key) + "': expected a number, got '" + s + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "on" || text == "1") return true;
  if (text == "false" || text == "off" || text == "0") return false;
  throw ConfigError("config '" + std::string(key) + "': expected true/false, got '" +
                    std::string(text) + "'");
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

EncoderConfig RunConfig::encoder_config() const {
  EncoderConfig c;
  c.seq_len = window;
  c.action_dim = kActDim;
  c.kernels = encoder_kernels;
  c.strides = encoder_strides;
  c.width = encoder_width;
  c.layers = encoder_layers;
  c.heads = encoder_heads;
  c.attn_dropout = encoder_dropout;
  c.causal = encoder_causal;
  c.ffn_mult = ffn_mult;
  return c;
}

DecoderConfig RunConfig::decoder_config() const {
  DecoderConfig c;
  c.width = decoder_width;
  c.layers = decoder_layers;
  c.heads = decoder_heads;
  c.attn_dropout = decoder_dropout;
  c.causal_self_attention = decoder_causal;
  c.ffn_mult = ffn_mult;
  return c;
}

FsqSpec RunConfig::fsq_spec() const {
  return FsqSpec(std::vector<int>(fsq_levels.begin(), fsq_levels.end()));
}

PriorConfig RunConfig::prior_config(std::size_t num_tasks) const {
  PriorConfig c;
  c.vocab_size = fsq_spec().codebook_size();
  c.width = prior_width;
  c.layers = prior_layers;
  c.heads = prior_heads;
  c.attn_dropout = prior_attn_dropout;
  c.embed_dropout = prior_embed_dropout;
  c.block_size = encoder_config().num_tokens();
  c.obs_history = obs_history;
  c.obs_dim = kObsDim;
  c.num_tasks = num_tasks;
  c.ffn_mult = ffn_mult;
  c.obs_hidden = prior_obs_hidden;
  return c;
}

SamplerConfig RunConfig::sampler_config() const { return {top_k, temperature}; }

ControlConfig RunConfig::control_config() const {
  ControlConfig c;
  c.execution_horizon = execution_horizon;
  c.max_steps = max_episode_steps;
  c.sampler = sampler_config();
  return c;
}

namespace {
TrainConfig make_train(const RunConfig& r, std::size_t epochs, std::size_t steps) {
  TrainConfig t;
  t.epochs = epochs;
  t.steps_per_epoch = steps;
  t.batch_size = r.batch_size;
  t.learning_rate = r.learning_rate;
  t.grad_clip = r.grad_clip;
  t.cosine_decay = r.cosine_decay;
  return t;
}
}  // namespace

TrainConfig RunConfig::stage1_train() const {
  return make_train(*this, stage1_epochs, stage1_steps_per_epoch);
}

TrainConfig RunConfig::stage2_train() const {
  return make_train(*this, stage2_epochs, stage2_steps_per_epoch);
}

FinetuneConfig RunConfig::finetune_config() const {
  FinetuneConfig f;
  f.train = make_train(*this, finetune_epochs, finetune_steps_per_epoch);
  f.decoder_finetune = decoder_finetune;
  f.loss_scale = decoder_loss_scale;
  f.sampler = sampler_config();
  return f;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  const Entry& e = find(key);
  value = trim(value);
  std::visit(
      [&](auto member) {
        using T = std::remove_reference_t<decltype(this->*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          this->*member = parse_bool(key, value);
        } else if constexpr (std::is_same_v<T, double>) {
          this->*member = parse_double(key, value);
        } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
          std::vector<std::size_t> out;
          for (const auto& part : split_list(value)) {
            out.push_back(parse_integer<std::size_t>(key, trim(part)));
          }
          if (out.empty()) throw ConfigError("config '" + std::string(key) + "': empty list");
          this->*member = out;
        } else {
          this->*member = parse_integer<T>(key, value);
        }
      },
      e.member);
}

std::string RunConfig::get(std::string_view key) const {
  const Entry& e = find(key);
  return std::visit(
      [&](auto member) -> std::string {
        const auto& v = this->*member;
        using T = std::remove_cvref_t<decltype(v)>;
        if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          return format_double(v);
        } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
          std::string s;
          for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) s += ',';
            s += std::to_string(v[i]);
          }
          return s;
        } else {
          return std::to_string(v);
        }
      },
      e.member);
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& e : registry()) out += std::string(e.name) + " = " + get(e.name) + "\n";
  return out;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : registry()) k.push_back({e.name, e.doc});
    return k;
  }();
  return keys;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

}  // namespace skilltok
