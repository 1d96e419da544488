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
#include "fedhug/synth.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "fedhug/errors.hpp"

namespace fedhug::synth {

namespace {

constexpr int kMaxRejections = 1000;
constexpr double kHrFloor = 40.0;
constexpr double kHrCeil = 180.0;

double draw_raw_hr(const HrDistributionSpec& spec, RngStream& rng) {
  switch (spec.kind) {
    case HrDistributionSpec::Kind::kUniform:
      return rng.uniform(spec.hr_min, spec.hr_max);
    case HrDistributionSpec::Kind::kTruncatedLognormal:
      return spec.median_bpm * std::exp(spec.log_sigma * rng.normal());
    case HrDistributionSpec::Kind::kGaussianMixture: {
      double u = rng.uniform();
      for (const auto& comp : spec.components) {
        if (u < comp.weight) return comp.mean_bpm + comp.sigma_bpm * rng.normal();
        u -= comp.weight;
      }
      const auto& last = spec.components.back();
      return last.mean_bpm + last.sigma_bpm * rng.normal();
    }
  }
  throw ConfigError("sample_hr: unknown distribution kind");
}

}  // namespace

void HrDistributionSpec::validate() const {
  if (!(hr_min >= kHrFloor && hr_max <= kHrCeil && hr_min <= hr_max))
    throw ConfigError("HrDistributionSpec: support must lie within [40, 180] bpm");
  if (kind == Kind::kGaussianMixture) {
    if (components.empty()) throw ConfigError("HrDistributionSpec: mixture needs components");
    double total = 0.0;
    for (const auto& c : components) {
      if (!(c.weight > 0.0) || !(c.sigma_bpm >= 0.0))
        throw ConfigError("HrDistributionSpec: invalid mixture component");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("HrDistributionSpec: mixture weights must sum to 1");
  }
  if (kind == Kind::kTruncatedLognormal && !(median_bpm > 0.0 && log_sigma >= 0.0))
    throw ConfigError("HrDistributionSpec: invalid lognormal parameters");
}

void BiasSpec::validate(double pulse_f_lo) const {
  if (!(row_gain_sigma >= 0.0 && noise_sigma >= 0.0 && drift_amp >= 0.0 && harmonic_ratio >= 0.0))
    throw ConfigError("BiasSpec: amplitudes must be >= 0");
  if (drift_amp > 0.0 && !(drift_freq > 0.0 && drift_freq < pulse_f_lo))
    throw ConfigError("BiasSpec: drift frequency must lie below the pulse band");
}

void ClientProfile::validate(double pulse_f_lo) const {
  if (id.empty()) throw ConfigError("ClientProfile: empty id");
  if (n_samples < 10) throw ConfigError("ClientProfile: need at least 10 samples");
  if (time_steps < 2 || rows < 1 || channels < 1) throw ConfigError("ClientProfile: invalid shape");
  if (!(fs > 0.0)) throw ConfigError("ClientProfile: invalid sampling rate");
  hr_dist.validate();
  bias.validate(pulse_f_lo);
}

void BenchmarkConfig::validate(double pulse_f_lo) const {
  pretrain.validate(pulse_f_lo);
  target.validate(pulse_f_lo);
  if (clients.size() < 2) throw ConfigError("BenchmarkConfig: need at least 2 clients");
  std::set<std::string> ids;
  for (const auto& c : clients) {
    c.validate(pulse_f_lo);
    if (!ids.insert(c.id).second) throw ConfigError("BenchmarkConfig: duplicate client id '" + c.id + "'");
  }
  if (ids.count(pretrain.id) || ids.count(target.id) || pretrain.id == target.id)
    throw ConfigError("BenchmarkConfig: pretrain/target ids must not collide with clients");
}

double sample_hr(const HrDistributionSpec& spec, RngStream& rng) {
  spec.validate();
  for (int i = 0; i < kMaxRejections; ++i) {
    const double hr = draw_raw_hr(spec, rng);
    if (hr >= spec.hr_min && hr <= spec.hr_max) return hr;
  }
  // Pathological spec (support with negligible mass): clamp the last draw.
  return std::clamp(draw_raw_hr(spec, rng), spec.hr_min, spec.hr_max);
}

SyntheticSample gen_sample(double hr_bpm, const ClientProfile& profile, RngStream& rng) {
  const int T = profile.time_steps;
  const int S = profile.rows;
  const int C = profile.channels;
  const double fs = profile.fs;
  const double f0 = hr_bpm / 60.0;
  const auto& bias = profile.bias;

  const double harmonic_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::vector<double> gt(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) {
    const double sec = static_cast<double>(t) / fs;
    gt[static_cast<std::size_t>(t)] = std::sin(2.0 * std::numbers::pi * f0 * sec) +
                                      bias.harmonic_ratio * std::sin(4.0 * std::numbers::pi * f0 * sec + harmonic_phase);
  }

  std::vector<double> row_gain(static_cast<std::size_t>(S), 1.0);
  if (bias.row_gain_sigma > 0.0) {
    for (double& g : row_gain) g = std::exp(bias.row_gain_sigma * rng.normal());
  }

  const double drift_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  signal::SpatioTemporalMap x(T, S, C, fs);
  for (int t = 0; t < T; ++t) {
    const double sec = static_cast<double>(t) / fs;
    const double drift = bias.drift_amp > 0.0
                             ? bias.drift_amp * std::sin(2.0 * std::numbers::pi * bias.drift_freq * sec + drift_phase)
                             : 0.0;
    for (int s = 0; s < S; ++s) {
      const double base = row_gain[static_cast<std::size_t>(s)] * gt[static_cast<std::size_t>(t)] + drift;
      for (int c = 0; c < C; ++c) {
        double v = base;
        if (bias.noise_sigma > 0.0) v += bias.noise_sigma * rng.normal();
        x.at(t, s, c) = static_cast<float>(v);
      }
    }
  }
  return SyntheticSample{std::move(x), signal::Waveform(std::move(gt), fs), hr_bpm};
}

namespace {

std::vector<SyntheticSample> gen_set(const ClientProfile& profile, RngStream& rng) {
  std::vector<SyntheticSample> out;
  out.reserve(static_cast<std::size_t>(profile.n_samples));
  for (int i = 0; i < profile.n_samples; ++i) {
    const double hr = sample_hr(profile.hr_dist, rng);
    out.push_back(gen_sample(hr, profile, rng));
  }
  return out;
}

}  // namespace

Benchmark gen_benchmark(const BenchmarkConfig& config, std::uint64_t master_seed) {
  config.validate(/*pulse_f_lo=*/0.66);

  Benchmark bench;
  {
    RngStream rng(master_seed, "synth.pretrain", fnv1a64(config.pretrain.id));
    bench.pretrain = gen_set(config.pretrain, rng);
  }
  for (const auto& profile : config.clients) {
    RngStream rng(master_seed, "synth.client", fnv1a64(profile.id));
    std::vector<SyntheticSample> all = gen_set(profile, rng);
    ClientDataset ds;
    ds.id = profile.id;
    const std::size_t n_train = all.size() * 4 / 5;
    for (std::size_t i = 0; i < all.size(); ++i) {
      (i < n_train ? ds.train : ds.val).push_back(std::move(all[i]));
    }
    bench.clients.push_back(std::move(ds));
  }
  {
    RngStream rng(master_seed, "synth.target", fnv1a64(config.target.id));
    bench.target = gen_set(config.target, rng);
  }
  return bench;
}

}  // namespace fedhug::synth
