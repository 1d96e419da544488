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
#include <vector>

#include "fedhug/rng.hpp"
#include "fedhug/signal.hpp"
#include "fedhug/vmf.hpp"

namespace fedhug::learner {

/// Reference architecture: learned per-(row, channel) spatial pooling into a
/// single trace, followed by a bank of learned circular FIR filters whose
/// outputs sum to the predicted waveform. The unit feature vector holds each
/// filter's output energy and first-difference energy, so the feature is a
/// coarse, amplitude-invariant spectral signature of the prediction.
struct ModelArch {
  int time_steps = 256;
  int rows = 25;
  int channels = 3;
  int filters = 8;
  int taps = 31;
  /// Taps at index >= active_taps are carried in theta but never used by the
  /// forward pass (their gradient is exactly zero). Equal to taps by default.
  int active_taps = 31;

  int feature_dim() const { return 2 * filters; }
  std::size_t pooling_count() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(channels);
  }
  std::size_t param_count() const {
    return pooling_count() + static_cast<std::size_t>(filters) * static_cast<std::size_t>(taps);
  }
  void validate() const;
  bool operator==(const ModelArch&) const = default;
};

/// Flat parameter vector: [pooling (rows*channels) | filter taps (filters*taps)].
struct ModelParams {
  ModelArch arch;
  std::vector<double> theta;

  void validate() const;
};

struct PredictedOutput {
  signal::Waveform signal;
  vmf::UnitVector feature;
  /// True when the energy statistics were (numerically) zero and the feature
  /// fell back to the first canonical basis vector.
  bool degenerate_feature = false;
};

/// Pulse band in Hz; defaults cover 40-180 bpm.
struct FrequencyBand {
  double f_lo = 0.66;
  double f_hi = 3.0;

  void validate(double fs) const;
};

struct LossWeights {
  double bandwidth = 1.0;
  double sparsity = 1.0;
  double variation = 1.0;
};

struct LossBreakdown {
  double bandwidth = 0.0;
  double sparsity = 0.0;
  double variation = 0.0;
  double total = 0.0;
};

/// Half-width of the peak window used by the sparsity loss, in Hz.
inline constexpr double kPeakHalfWidthHz = 0.1;

ModelParams zero_params(const ModelArch& arch);

/// Pooling = spatial mean of channel 0, one passthrough tap per filter;
/// with a single filter the output equals the mean trace of channel 0.
ModelParams identity_params(const ModelArch& arch);

/// Pretraining start point: uniform pooling plus a bank of Hann-windowed
/// cosine taps with center frequencies spread across the band, each filter
/// normalized to unit gain at its center, then jittered.
ModelParams init_params(const ModelArch& arch, const FrequencyBand& band, double fs, RngStream& rng);

PredictedOutput forward(const ModelParams& params, const signal::SpatioTemporalMap& x);

/// SiNC-style spectral losses over a batch of predictions:
///   bandwidth = mean out-of-band power fraction,
///   sparsity  = mean non-peak in-band power fraction,
///   variation = KL(batch-mean in-band spectrum || uniform over the band).
/// Throws DegenerateSpectrumError when any sample's total power < 1e-12.
LossBreakdown unsup_loss(const std::vector<PredictedOutput>& batch, const FrequencyBand& band,
                         const LossWeights& weights = {});

/// Analytic gradient of scale * unsup_loss(forward(theta, batch)) w.r.t.
/// theta. scale is the V_KL coefficient (or 1).
std::vector<double> grad(const ModelParams& params,
                         const std::vector<const signal::SpatioTemporalMap*>& batch,
                         const FrequencyBand& band, double scale,
                         const LossWeights& weights = {});

/// Gradient plus the quantities the protocol needs from the same pass.
struct BatchEval {
  std::vector<double> grad;
  LossBreakdown loss;
  std::vector<vmf::UnitVector> features;
  std::size_t degenerate_features = 0;
};

BatchEval eval_batch(const ModelParams& params,
                     const std::vector<const signal::SpatioTemporalMap*>& batch,
                     const FrequencyBand& band, double scale, const LossWeights& weights = {});

/// One plain gradient step: theta' = theta - lr * v_kl * grad.
ModelParams local_update(const ModelParams& params,
                         const std::vector<const signal::SpatioTemporalMap*>& batch,
                         const FrequencyBand& band, double lr, double v_kl,
                         const LossWeights& weights = {});

/// 1 - Pearson correlation; 0 for perfectly correlated, 2 for anti-correlated.
double supervised_loss(const signal::Waveform& pred, const signal::Waveform& gt);

struct SupervisedEval {
  std::vector<double> grad;
  double loss = 0.0;
};

/// Mean supervised loss over (input, target) pairs with its analytic gradient.
SupervisedEval eval_supervised_batch(const ModelParams& params,
                                     const std::vector<const signal::SpatioTemporalMap*>& inputs,
                                     const std::vector<const signal::Waveform*>& targets);

/// Dominant in-band frequency (quadratically interpolated) times 60.
double estimate_hr(const signal::Waveform& w, const FrequencyBand& band);

/// Adam with bias correction; used by the supervised pretraining stage.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t param_count, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  void step(std::vector<double>& theta, const std::vector<double>& gradient);

 private:
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace fedhug::learner
