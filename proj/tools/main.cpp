/**
 * Copyright 2026 The fedhug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedhug/config.hpp"
#include "fedhug/errors.hpp"
#include "fedhug/experiment.hpp"

namespace {

using fedhug::cfg::ExperimentConfig;

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::optional<int> rounds;
  std::optional<std::string> policy;
  std::optional<bool> gdlc;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::string> output_dir;
  std::optional<int> threads;
  std::optional<std::string> dataset_path;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "Config file (JSON)");
  cmd->add_option("--preset", args.preset, "Built-in benchmark preset (rppg-4 | mmwave-3)");
  cmd->add_option("--rounds", args.rounds, "Override communication rounds");
  cmd->add_option("--policy", args.policy, "Override aggregation policy (mba | fedavg)");
  cmd->add_option("--gdlc", args.gdlc, "Override GDLC on/off");
  cmd->add_option("--seeds", args.seeds, "Override seed list")->delimiter(',');
  cmd->add_option("-o,--output-dir", args.output_dir, "Override output directory");
  cmd->add_option("--threads", args.threads, "Override worker thread count");
  cmd->add_option("--dataset", args.dataset_path, "Load samples from a generated dataset directory");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
  nlohmann::json j;
  if (!args.config_path.empty()) {
    std::ifstream is(args.config_path);
    if (!is) throw fedhug::IoError("cannot open config '" + args.config_path + "'");
    is >> j;
  } else {
    j = nlohmann::json::object();
  }
  if (!args.preset.empty()) j["benchmark"] = {{"preset", args.preset}};
  if (!j.contains("benchmark")) j["benchmark"] = {{"preset", "rppg-4"}};

  // Flag overrides take precedence over the file.
  if (args.rounds) j["rounds"] = *args.rounds;
  if (args.policy) j["policy"]["kind"] = *args.policy;
  if (args.gdlc) j["gdlc"]["enabled"] = *args.gdlc;
  if (args.seeds) j["seeds"] = *args.seeds;
  if (args.output_dir) j["output_dir"] = *args.output_dir;
  if (args.threads) j["threads"] = *args.threads;
  if (args.dataset_path) j["dataset_path"] = *args.dataset_path;

  auto config = fedhug::cfg::parse_config(j);
  if (config.beta_present)
    std::cerr << "warning: config key 'beta' is reserved and currently unused\n";
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator for federated unsupervised physiological-model adaptation"};
  app.require_subcommand(1);

  CommonArgs gen_args, pre_args, run_args, rep_args;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  bool run_resume = false;
  std::vector<std::string> report_dirs;
  std::string report_out = "report";

  auto* gen = app.add_subcommand("gen", "Generate a synthetic benchmark dataset directory");
  add_common(gen, gen_args);
  gen->add_option("--seed", gen_seed, "Master seed for generation");
  gen->add_option("--out", gen_out, "Dataset directory to write")->required();

  auto* pretrain = app.add_subcommand("pretrain", "Supervised pretraining of the initial global model");
  add_common(pretrain, pre_args);

  auto* run = app.add_subcommand("run", "Run the federated protocol for every configured seed");
  add_common(run, run_args);
  run->add_flag("--resume", run_resume, "Continue each seed from its latest round checkpoint");

  auto* report = app.add_subcommand("report", "Compare finished run directories");
  report->add_option("dirs", report_dirs, "Run directories (first one is the baseline)")->required();
  report->add_option("--out", report_out, "Report output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      fedhug::exp::cmd_gen(resolve_config(gen_args), gen_seed, gen_out);
    } else if (pretrain->parsed()) {
      fedhug::exp::cmd_pretrain(resolve_config(pre_args));
    } else if (run->parsed()) {
      fedhug::exp::cmd_run(resolve_config(run_args), run_resume);
    } else if (report->parsed()) {
      std::vector<std::filesystem::path> dirs(report_dirs.begin(), report_dirs.end());
      fedhug::exp::cmd_report(dirs, report_out);
    }
  } catch (const fedhug::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fedhug::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const fedhug::ConvergenceError& e) {
    std::cerr << "convergence failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
