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

#include "fedhug/rng.hpp"
#include "fedhug/signal.hpp"

namespace fedhug::synth {

/// Per-client heart-rate prior. Long-tail shapes come from the
/// truncated-lognormal kind; mixtures model bimodal cohorts.
struct HrDistributionSpec {
  enum class Kind { kTruncatedLognormal, kGaussianMixture, kUniform };

  struct MixtureComponent {
    double mean_bpm = 70.0;
    double sigma_bpm = 10.0;
    double weight = 1.0;
  };

  Kind kind = Kind::kTruncatedLognormal;
  double median_bpm = 72.0;   // lognormal location (exp of the log-mean)
  double log_sigma = 0.25;    // lognormal shape
  std::vector<MixtureComponent> components;  // gaussian-mixture only
  double hr_min = 45.0;
  double hr_max = 175.0;

  void validate() const;
};

/// Client-specific signal corruption. All amplitudes are relative to the
/// unit-amplitude pulse fundamental.
struct BiasSpec {
  double row_gain_sigma = 0.0;  // lognormal spread of per-row gains
  double noise_sigma = 0.0;     // additive white noise
  double drift_amp = 0.0;       // low-frequency baseline wander
  double drift_freq = 0.25;     // Hz; must stay below the pulse band
  double harmonic_ratio = 0.0;  // 2nd-harmonic amplitude in the ground truth

  void validate(double pulse_f_lo) const;
};

struct ClientProfile {
  std::string id;
  HrDistributionSpec hr_dist;
  BiasSpec bias;
  int n_samples = 100;
  int time_steps = 256;
  int rows = 25;
  int channels = 3;
  double fs = 30.0;

  void validate(double pulse_f_lo) const;
};

struct SyntheticSample {
  signal::SpatioTemporalMap x;
  signal::Waveform gt_signal;
  double gt_hr = 0.0;  // bpm; evaluation-only, never enters the protocol
};

struct ClientDataset {
  std::string id;
  std::vector<SyntheticSample> train;
  std::vector<SyntheticSample> val;
};

struct BenchmarkConfig {
  ClientProfile pretrain;
  std::vector<ClientProfile> clients;  // >= 2, distinct ids
  ClientProfile target;

  void validate(double pulse_f_lo) const;
};

struct Benchmark {
  std::vector<SyntheticSample> pretrain;
  std::vector<ClientDataset> clients;  // each split 4:1 train/val
  std::vector<SyntheticSample> target;
};

/// One draw from the HR prior, rejection-truncated to [hr_min, hr_max].
double sample_hr(const HrDistributionSpec& spec, RngStream& rng);

/// One synthetic sample at the given heart rate: a unit sinusoid plus
/// optional second harmonic as ground truth, replicated across rows with
/// per-row gains, drift and noise per the profile's BiasSpec.
SyntheticSample gen_sample(double hr_bpm, const ClientProfile& profile, RngStream& rng);

/// Full multi-domain benchmark. Per-client streams are derived from
/// (master seed, client id), so adding a client never perturbs another
/// client's data. Client sets are split 4:1 into train/val.
Benchmark gen_benchmark(const BenchmarkConfig& config, std::uint64_t master_seed);

}  // namespace fedhug::synth
