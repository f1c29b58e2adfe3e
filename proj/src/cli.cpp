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

#include "skilltok/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "skilltok/binary_io.hpp"
#include "skilltok/checkpoint.hpp"
#include "skilltok/config.hpp"
#include "skilltok/controller.hpp"
#include "skilltok/dataset_io.hpp"
#include "skilltok/errors.hpp"
#include "skilltok/grad_check.hpp"
#include "skilltok/metrics.hpp"
#include "skilltok/tasks.hpp"
#include "skilltok/training.hpp"

namespace skilltok::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string data;
  std::string stage1;
  std::string stage2;
  std::string demos;
  std::string decoder_finetune;
  std::optional<double> loss_scale;
  std::optional<std::size_t> episodes;
  std::string tasks;
  std::string encoder_causal;
  std::string decoder_causal;
};

// Subcommand bodies write through these.
struct Io {
  std::ostream& out;
  const Options& opt;

  std::string path(const std::string& name) const { return (fs::path(opt.out) / name).string(); }
};

// Flags shared by every subcommand are applied on top of `base`.
RunConfig finish_config(RunConfig cfg, const Options& opt) {
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.encoder_causal.empty()) cfg.set("encoder.causal", opt.encoder_causal);
  if (!opt.decoder_causal.empty()) cfg.set("decoder.causal", opt.decoder_causal);
  if (!opt.decoder_finetune.empty()) cfg.set("finetune.decoder", opt.decoder_finetune);
  if (opt.loss_scale) cfg.decoder_loss_scale = *opt.loss_scale;
  if (opt.episodes) cfg.eval_episodes = *opt.episodes;
  return cfg;
}

RunConfig fresh_config(const Options& opt) {
  return finish_config(opt.config.empty() ? RunConfig{} : load_config(opt.config), opt);
}

// Config for commands that start from a checkpoint: an explicit --config must
// agree with the checkpoint's architecture; without one the snapshot is used.
RunConfig config_for(const RunConfig& snapshot, const Options& opt) {
  if (opt.config.empty()) return finish_config(snapshot, opt);
  RunConfig cfg = fresh_config(opt);
  require_same_architecture(cfg, snapshot);
  return cfg;
}

int num_tasks_in(const TrajectoryDataset& data) {
  int n = 0;
  for (const auto& e : data.episodes) n = std::max(n, e.task_id + 1);
  return n;
}

int gen_data(const Io& io) {
  const RunConfig cfg = fresh_config(io.opt);
  const auto train =
      generate_suite(cfg.seed, pretraining_suite(cfg.demos_per_task, cfg.window));
  const auto fewshot = generate_suite(cfg.seed, fewshot_suite(cfg.fewshot_demos, 8, cfg.window));
  write_dataset(io.path("train.qstd"), train);
  write_dataset(io.path("fewshot.qstd"), fewshot);
  io.out << "wrote " << train.episodes.size() << " training episodes ("
         << train.window_count(cfg.window) << " windows) to " << io.path("train.qstd") << "\n"
         << "wrote " << fewshot.episodes.size() << " few-shot episodes to "
         << io.path("fewshot.qstd") << "\n";
  return 0;
}

int train_stage1_cmd(const Io& io) {
  const RunConfig cfg = fresh_config(io.opt);
  const auto data = read_dataset(io.opt.data);
  const auto windows = extract_action_windows(data, cfg.window);
  MetricsWriter metrics(io.path("metrics.jsonl"));
  const auto model = train_stage1(windows, cfg.encoder_config(), cfg.decoder_config(),
                                  cfg.fsq_spec(), cfg.stage1_train(), cfg.seed, metrics.sink());
  write_file(io.path("stage1.ckpt"), serialize_stage1(model, cfg));
  io.out << "reconstruction l1 " << reconstruction_error(model, windows) << "\n"
         << "wrote " << io.path("stage1.ckpt") << "\n";
  return 0;
}

int train_stage2_cmd(const Io& io) {
  const std::string s1 = read_file(io.opt.stage1);
  RunConfig snapshot;
  const auto model = load_stage1(s1, &snapshot);
  const RunConfig cfg = config_for(snapshot, io.opt);
  const auto data = read_dataset(io.opt.data);
  MetricsWriter metrics(io.path("metrics.jsonl"));
  const auto prior = train_stage2(data, model, cfg.prior_config(num_tasks_in(data)),
                                  cfg.stage2_train(), cfg.seed, metrics.sink());
  write_file(io.path("stage2.ckpt"), serialize_stage2(prior, cfg, s1));
  io.out << "wrote " << io.path("stage2.ckpt") << "\n";
  return 0;
}

int finetune_cmd(const Io& io) {
  const std::string s1 = read_file(io.opt.stage1);
  RunConfig snapshot;
  const auto model = load_stage1(s1, &snapshot);
  const auto prior = load_stage2(read_file(io.opt.stage2), s1);
  const RunConfig cfg = config_for(snapshot, io.opt);
  const auto demos = read_dataset(io.opt.demos);
  MetricsWriter metrics(io.path("metrics.jsonl"));
  const auto result =
      finetune_fewshot(model, prior, demos, cfg.finetune_config(), cfg.seed, metrics.sink());
  const std::string out1 = serialize_stage1(result.autoencoder, cfg);
  write_file(io.path("finetuned_stage1.ckpt"), out1);
  write_file(io.path("finetuned_stage2.ckpt"), serialize_stage2(result.prior, cfg, out1));
  io.out << "wrote " << io.path("finetuned_stage1.ckpt") << " and "
         << io.path("finetuned_stage2.ckpt") << "\n";
  return 0;
}

std::vector<TaskSpec> select_tasks(const std::string& list, std::size_t available,
                                   std::size_t window) {
  const auto names = task_names();
  std::vector<int> ids;
  if (list.empty()) {
    for (std::size_t i = 0; i < std::min(available, names.size()); ++i) {
      ids.push_back(static_cast<int>(i));
    }
  } else {
    for (const auto& item : split_list(list)) {
      const auto it = std::find(names.begin(), names.end(), item);
      if (it != names.end()) {
        ids.push_back(static_cast<int>(it - names.begin()));
        continue;
      }
      int id = -1;
      const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), id);
      if (ec != std::errc() || p != item.data() + item.size() || id < 0 ||
          static_cast<std::size_t>(id) >= names.size()) {
        throw ArgumentError("unknown task '" + item + "'");
      }
      ids.push_back(id);
    }
  }
  std::vector<TaskSpec> tasks;
  for (int id : ids) {
    if (static_cast<std::size_t>(id) >= available) {
      throw ConfigError("task '" + names[id] + "' has no embedding in this prior");
    }
    tasks.push_back(make_task(names[id], id, 0, window));
  }
  return tasks;
}

int eval_cmd(const Io& io) {
  const std::string s1 = read_file(io.opt.stage1);
  RunConfig snap1;
  RunConfig snap2;
  const auto model = load_stage1(s1, &snap1);
  const auto prior = load_stage2(read_file(io.opt.stage2), s1, &snap2);
  require_same_architecture(snap2, snap1);
  const RunConfig cfg = config_for(snap2, io.opt);
  const Policy policy(model, prior, cfg.control_config());
  const auto tasks = select_tasks(io.opt.tasks, prior.num_tasks(), cfg.window);

  std::vector<RolloutResult> log;
  const auto results = evaluate_tasks(tasks, policy, {cfg.seed}, cfg.eval_episodes, &log);
  std::ofstream rollouts(io.path("rollouts.jsonl"));
  if (!rollouts) throw ArgumentError("cannot open " + io.path("rollouts.jsonl"));
  for (const auto& r : log) rollouts << to_json_line(r) << "\n";

  MetricsWriter metrics(io.path("metrics.jsonl"));
  for (const auto& t : results) {
    MetricsRecord rec;
    rec.phase = "eval";
    rec.success_rate = t.mean;
    rec.task_id = t.task_id;
    rec.seed = cfg.seed;
    metrics.write(rec);
    char line[96];
    std::snprintf(line, sizeof line, "%-14s %.3f\n", t.name.c_str(), t.mean);
    io.out << line;
  }
  char line[64];
  std::snprintf(line, sizeof line, "mean           %.3f\n", mean_success(results));
  io.out << line;
  return 0;
}

int codebook_stats(const Io& io) {
  const auto model = load_stage1(read_file(io.opt.stage1));
  const auto data = read_dataset(io.opt.data);
  const auto codes = encode_windows(model, extract_action_windows(data, model.seq_len()));
  if (codes.empty()) throw ArgumentError("dataset has no complete windows");
  std::map<int, std::size_t> counts;
  for (int c : codes) ++counts[c];
  std::vector<std::pair<int, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  nlohmann::ordered_json j;
  j["codebook_size"] = model.fsq().codebook_size();
  j["tokens"] = codes.size();
  j["distinct_codes"] = counts.size();
  j["utilization"] = utilization(codes, model.fsq());
  auto& top = j["top_codes"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(10, ranked.size()); ++i) {
    top.push_back({{"code", ranked[i].first}, {"count", ranked[i].second}});
  }
  write_file(io.path("codebook_stats.json"), j.dump(2) + "\n");
  io.out << j.dump(2) << "\n";
  return 0;
}

int export_embeddings(const Io& io) {
  const auto model = load_stage1(read_file(io.opt.stage1));
  const auto data = read_dataset(io.opt.data);
  if (data.act_dim != model.action_dim()) {
    throw ConfigError("dataset action dim " + std::to_string(data.act_dim) +
                      " does not match checkpoint action dim " +
                      std::to_string(model.action_dim()));
  }
  const std::size_t t_len = model.seq_len();
  const std::size_t width = model.num_tokens() * model.fsq().dim();
  std::ofstream csv(io.path("embeddings.csv"));
  if (!csv) throw ArgumentError("cannot open " + io.path("embeddings.csv"));
  csv << "task_id,timestep";
  for (std::size_t i = 0; i < width; ++i) csv << ",z" << i;
  csv << "\n";

  NoGradGuard no_grad;
  std::size_t rows = 0;
  for (const auto& episode : data.episodes) {
    TrajectoryDataset one;
    one.obs_dim = data.obs_dim;
    one.act_dim = data.act_dim;
    one.episodes.push_back(episode);
    const auto windows = extract_action_windows(one, t_len);
    for (std::size_t start = 0; start < windows.count(); start += 256) {
      std::vector<std::size_t> idx;
      for (std::size_t w = start; w < std::min(windows.count(), start + 256); ++w) {
        idx.push_back(w);
      }
      const Encoding enc = model.encode(windows.gather(idx));
      const auto values = enc.values.data();
      for (std::size_t r = 0; r < idx.size(); ++r) {
        csv << episode.task_id << "," << idx[r];
        for (std::size_t i = 0; i < width; ++i) csv << "," << values[r * width + i];
        csv << "\n";
        ++rows;
      }
    }
  }
  io.out << "wrote " << rows << " rows to " << io.path("embeddings.csv") << "\n";
  return 0;
}

int grad_check_cmd(const Io& io) {
  const RunConfig cfg = fresh_config(io.opt);
  double worst = 0.0;
  for (const auto& c : run_grad_check_suite(cfg.seed)) {
    char line[96];
    std::snprintf(line, sizeof line, "%-30s %.3e\n", c.name.c_str(), c.max_relative_error);
    io.out << line;
    worst = std::max(worst, c.max_relative_error);
  }
  char line[64];
  std::snprintf(line, sizeof line, "max relative error %.3e\n", worst);
  io.out << line;
  return worst < 1e-4 ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantized skill tokenizer and prior on a 2D point-agent suite", "skilltok"};
  app.require_subcommand(1);
  Options opt;
  const std::vector<std::string> on_off{"on", "off"};

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Run config (key = value lines)")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "Overrides the config seed");
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    sub->add_option("--encoder-causal", opt.encoder_causal, "Causal encoder convs and mask")
        ->check(CLI::IsMember(on_off));
    sub->add_option("--decoder-causal", opt.decoder_causal, "Causal decoder self-attention")
        ->check(CLI::IsMember(on_off));
    return sub;
  };
  auto require_file = [](CLI::App* sub, const std::string& flag, std::string& target,
                         const std::string& help) {
    sub->add_option(flag, target, help)->required()->check(CLI::ExistingFile);
  };

  std::map<CLI::App*, int (*)(const Io&)> handlers;
  CLI::App* sub = add_common(app.add_subcommand("gen-data", "Generate the demonstration suite"));
  handlers[sub] = gen_data;

  sub = add_common(app.add_subcommand("train-stage1", "Train the skill autoencoder"));
  require_file(sub, "--data", opt.data, "Training dataset");
  handlers[sub] = train_stage1_cmd;

  sub = add_common(app.add_subcommand("train-stage2", "Train the skill prior"));
  require_file(sub, "--data", opt.data, "Training dataset");
  require_file(sub, "--stage1", opt.stage1, "Stage-1 checkpoint");
  handlers[sub] = train_stage2_cmd;

  sub = add_common(app.add_subcommand("finetune", "Few-shot adaptation to new demos"));
  require_file(sub, "--stage1", opt.stage1, "Stage-1 checkpoint");
  require_file(sub, "--stage2", opt.stage2, "Stage-2 checkpoint");
  require_file(sub, "--demos", opt.demos, "Few-shot dataset");
  sub->add_option("--decoder-finetune", opt.decoder_finetune, "Also adapt the decoder")
      ->check(CLI::IsMember(on_off));
  sub->add_option("--loss-scale", opt.loss_scale, "Weight of the decoder l1 term");
  handlers[sub] = finetune_cmd;

  sub = add_common(app.add_subcommand("eval", "Closed-loop evaluation"));
  require_file(sub, "--stage1", opt.stage1, "Stage-1 checkpoint");
  require_file(sub, "--stage2", opt.stage2, "Stage-2 checkpoint");
  sub->add_option("--episodes", opt.episodes, "Episodes per task");
  sub->add_option("--tasks", opt.tasks, "Comma-separated task names or ids");
  handlers[sub] = eval_cmd;

  sub = add_common(app.add_subcommand("codebook-stats", "Code usage over a dataset"));
  require_file(sub, "--stage1", opt.stage1, "Stage-1 checkpoint");
  require_file(sub, "--data", opt.data, "Dataset");
  handlers[sub] = codebook_stats;

  sub = add_common(app.add_subcommand("export-embeddings", "Quantized embeddings as CSV"));
  require_file(sub, "--stage1", opt.stage1, "Stage-1 checkpoint");
  require_file(sub, "--data", opt.data, "Dataset");
  handlers[sub] = export_embeddings;

  sub = add_common(app.add_subcommand("grad-check", "Finite-difference gradient oracle suite"));
  handlers[sub] = grad_check_cmd;

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    fs::create_directories(opt.out);
    for (const auto& [command, handler] : handlers) {
      if (command->parsed()) return handler(Io{out, opt});
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace skilltok::cli
