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

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedhug/federation.hpp"
#include "fedhug/learner.hpp"
#include "fedhug/signal.hpp"
#include "fedhug/synth.hpp"

namespace fedhug::cfg {

struct PretrainConfig {
  int epochs = 50;
  double lr = 2e-3;
  std::size_t batch_size = 100;
  int plateau_epochs = 5;
  double min_improvement = 1e-4;
};

/// Fully resolved experiment description. `resolved` is the canonical JSON
/// echo written into every manifest; hashing it fingerprints the experiment.
struct ExperimentConfig {
  synth::BenchmarkConfig benchmark;
  std::string dataset_path;  // when nonempty, load instead of generating

  int model_filters = 8;
  int model_taps = 31;

  int rounds = 100;
  double lr = 1e-4;
  std::size_t batch_size = 100;
  int local_epochs = 1;

  fed::AggregationPolicy policy;
  fed::GdlcOptions gdlc;
  learner::FrequencyBand band;
  signal::AugmentPolicy augment;
  double ssm_window_s = 1.5;
  learner::LossWeights loss_weights;
  PretrainConfig pretrain;

  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int target_every = 10;
  int checkpoint_every = 0;  // 0 = only final
  int threads = 2;
  std::string output_dir = "out";
  bool beta_present = false;  // reserved key, accepted but unused

  nlohmann::json resolved;

  learner::ModelArch arch() const;
  std::string config_hash() const;
};

/// Built-in full configs: "rppg-4" (camera-style shapes, 4 source clients)
/// and "mmwave-3" (radar-style shapes, 3 source clients).
nlohmann::json preset_config(const std::string& name);

/// Schema-validates (unknown keys rejected, `beta` accepted and flagged) and
/// resolves presets + defaults into an ExperimentConfig.
ExperimentConfig parse_config(const nlohmann::json& j);

ExperimentConfig load_config_file(const std::string& path);

}  // namespace fedhug::cfg
