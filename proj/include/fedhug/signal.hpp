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
#include <span>
#include <vector>

#include "fedhug/rng.hpp"

namespace fedhug::signal {

/// Sampled physiological waveform (BVP-like). At least 2 finite samples.
struct Waveform {
  std::vector<double> samples;
  double fs = 30.0;  // Hz

  Waveform() = default;
  Waveform(std::vector<double> s, double sampling_hz);

  std::size_t length() const { return samples.size(); }
};

/// Rank-3 input tensor (time, spatial rows, channels); the model input.
/// Values are stored as float to keep large synthetic datasets compact;
/// all downstream arithmetic is double.
class SpatioTemporalMap {
 public:
  SpatioTemporalMap(int t, int s, int c, double sampling_hz);
  SpatioTemporalMap(int t, int s, int c, double sampling_hz, std::vector<float> values);

  int time_steps() const { return t_; }
  int rows() const { return s_; }
  int channels() const { return c_; }
  double fs() const { return fs_; }

  float& at(int t, int s, int c) { return values_[index(t, s, c)]; }
  float at(int t, int s, int c) const { return values_[index(t, s, c)]; }

  const std::vector<float>& values() const { return values_; }
  std::vector<float>& values() { return values_; }

  /// Throws DomainError on non-finite content.
  void check_finite() const;

 private:
  std::size_t index(int t, int s, int c) const {
    return (static_cast<std::size_t>(t) * static_cast<std::size_t>(s_) + static_cast<std::size_t>(s)) *
               static_cast<std::size_t>(c_) +
           static_cast<std::size_t>(c);
  }

  int t_ = 0;
  int s_ = 0;
  int c_ = 0;
  double fs_ = 30.0;
  std::vector<float> values_;
};

/// Matrix of pairwise cosine similarities between sliding segments.
struct SelfSimilarityMatrix {
  std::vector<double> entries;  // row-major, order x order
  std::size_t order = 0;
  std::size_t window = 0;  // segment length l in samples

  double at(std::size_t i, std::size_t j) const { return entries[i * order + j]; }
};

/// Semantics-preserving input perturbation: circular temporal shift within
/// +-max_shift_s, optional spatial row permutation, optional additive noise.
struct AugmentPolicy {
  double max_shift_s = 1.0;
  bool permute_rows = true;
  double noise_sigma = 0.0;

  void validate() const;
};

/// Concrete draw of an AugmentPolicy, reusable across tensors that share a
/// ground truth (the temporal shift also applies to the reference waveform).
struct AugmentParams {
  int shift_samples = 0;
  std::vector<int> row_order;  // empty = identity
  double noise_sigma = 0.0;
};

/// Stride-1 sliding windows of length l, in temporal order. The returned
/// spans alias the waveform's storage.
std::vector<std::span<const double>> extract_segments(const Waveform& w, std::size_t l);

struct SsmOptions {
  /// Subtract each segment's mean before the cosine (off by default; the
  /// plain cosine is the reference definition).
  bool mean_center = false;
};

/// Self-similarity matrix of the waveform at window length l.
/// Zero-norm segments get similarity 0 against everything; if every segment
/// is zero this is a DegenerateSignalError.
SelfSimilarityMatrix compute_ssm(const Waveform& w, std::size_t l, const SsmOptions& opts = {});

/// Frobenius cosine between two SSMs of identical order, in [-1, 1].
/// This is the per-sample term of the consistency score; the client-level
/// score averages it over samples.
double ssm_similarity(const SelfSimilarityMatrix& m, const SelfSimilarityMatrix& m_a);

/// Default SSM window: spans one cardiac cycle for HR >= 40 bpm.
std::size_t default_ssm_window(double fs);

AugmentParams draw_augment_params(const AugmentPolicy& policy, double fs, int rows, RngStream& rng);

SpatioTemporalMap apply_augment(const SpatioTemporalMap& x, const AugmentParams& params, RngStream& rng);

/// Draw + apply in one step.
SpatioTemporalMap augment(const SpatioTemporalMap& x, const AugmentPolicy& policy, RngStream& rng);

/// The temporal component of an augmentation applied to a reference
/// waveform (used when scoring consistency of ground-truth signals).
Waveform shift_waveform(const Waveform& w, int shift_samples);

}  // namespace fedhug::signal
