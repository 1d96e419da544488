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
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedhug/config.hpp"
#include "fedhug/federation.hpp"
#include "fedhug/metrics.hpp"
#include "fedhug/synth.hpp"

// Operator-facing assembly: this is the only layer that holds both the
// protocol engine and the labeled evaluation data.
namespace fedhug::exp {

/// Benchmark from config: generated in memory, or loaded from a dataset
/// directory when the config names one.
synth::Benchmark acquire_benchmark(const cfg::ExperimentConfig& config, std::uint64_t seed);

struct PretrainResult {
  learner::ModelParams model;
  double val_loss = 0.0;
  double val_pearson = 0.0;
  int epochs_run = 0;
  bool converged = false;
};

/// Supervised pretraining (Adam, 1 - Pearson loss) on the labeled pretrain
/// set, split 4:1 for the plateau stop. lr = 0 that cannot move the loss is
/// a ConvergenceError.
PretrainResult pretrain_model(const synth::Benchmark& bench, const cfg::ExperimentConfig& config,
                              std::uint64_t seed);

struct ResumeState {
  learner::ModelParams model;
  vmf::GlobalDistState dist;
  int round = 0;                     // next round to execute
  std::optional<double> calibrated_sigma;
};

struct SeedRunResult {
  fed::RunResult run;
  metrics::EvalResult final_target;
  std::vector<double> target_pred;
  std::vector<double> target_gt;
  /// Per-sample consistency scores of the final model on each client's
  /// train set, client order as configured.
  std::vector<std::pair<std::string, std::vector<double>>> final_s_values;
};

/// One full protocol run for one seed: wires the benchmark's unlabeled
/// client views into the protocol engine, evaluates validation sets every
/// round and the target set on the configured cadence, then scores the
/// final model on the target set.
SeedRunResult run_seed(const synth::Benchmark& bench, const learner::ModelParams& initial,
                       const cfg::ExperimentConfig& config, std::uint64_t seed,
                       const std::optional<ResumeState>& resume = std::nullopt,
                       const std::filesystem::path* run_dir = nullptr);

/// Per-sample consistency scores of the ground-truth waveforms themselves
/// (only the temporal shift of the augmentation applies to a waveform).
std::vector<double> gt_consistency_scores(const std::vector<synth::SyntheticSample>& samples,
                                          const signal::AugmentPolicy& policy, std::size_t ssm_window,
                                          RngStream& rng);

// ---- CLI commands (throwing; the binary maps exceptions to exit codes) ----

/// Writes manifest + per-sample binary containers for one seed.
void cmd_gen(const cfg::ExperimentConfig& config, std::uint64_t seed,
             const std::filesystem::path& out_dir);

synth::Benchmark load_dataset(const std::filesystem::path& dir);

/// Pretrains one checkpoint per configured seed under output_dir/pretrain.
/// A checkpoint whose sidecar says converged (same config hash) is left
/// untouched.
void cmd_pretrain(const cfg::ExperimentConfig& config);

/// Runs every configured seed; writes history JSONL, CSV summary, round
/// checkpoints and final artifacts under output_dir/runs/seed_<s>.
/// With resume = true, seeds with a checkpoint continue from it.
void cmd_run(const cfg::ExperimentConfig& config, bool resume = false);

/// Cross-run comparison report (mean +- sd metrics, paired per-seed MAE
/// differences, tail-interval table, s-distribution CSVs).
void cmd_report(const std::vector<std::filesystem::path>& run_dirs,
                const std::filesystem::path& out_dir);

}  // namespace fedhug::exp
