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
#include "fedhug/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedhug/errors.hpp"

namespace fedhug::signal {

namespace {

constexpr double kZeroNormSq = 1e-24;

}  // namespace

Waveform::Waveform(std::vector<double> s, double sampling_hz) : samples(std::move(s)), fs(sampling_hz) {
  if (samples.size() < 2) throw ShapeError("Waveform: length must be >= 2");
  if (!(fs > 0.0)) throw DomainError("Waveform: sampling rate must be > 0");
  for (double x : samples) {
    if (!std::isfinite(x)) throw DomainError("Waveform: non-finite sample");
  }
}

SpatioTemporalMap::SpatioTemporalMap(int t, int s, int c, double sampling_hz)
    : t_(t), s_(s), c_(c), fs_(sampling_hz) {
  if (t < 1 || s < 1 || c < 1) throw ShapeError("SpatioTemporalMap: all dimensions must be >= 1");
  if (!(fs_ > 0.0)) throw DomainError("SpatioTemporalMap: sampling rate must be > 0");
  values_.assign(static_cast<std::size_t>(t) * static_cast<std::size_t>(s) * static_cast<std::size_t>(c), 0.0f);
}

SpatioTemporalMap::SpatioTemporalMap(int t, int s, int c, double sampling_hz, std::vector<float> values)
    : SpatioTemporalMap(t, s, c, sampling_hz) {
  if (values.size() != values_.size()) throw ShapeError("SpatioTemporalMap: value count does not match shape");
  values_ = std::move(values);
}

void SpatioTemporalMap::check_finite() const {
  for (float v : values_) {
    if (!std::isfinite(v)) throw DomainError("SpatioTemporalMap: non-finite value");
  }
}

void AugmentPolicy::validate() const {
  if (!(max_shift_s >= 0.0)) throw DomainError("AugmentPolicy: max_shift_s must be >= 0");
  if (!(noise_sigma >= 0.0)) throw DomainError("AugmentPolicy: noise_sigma must be >= 0");
}

std::vector<std::span<const double>> extract_segments(const Waveform& w, std::size_t l) {
  const std::size_t L = w.length();
  if (l == 0 || l > L) throw InvalidWindowError("extract_segments: window length must be in [1, L]");
  std::vector<std::span<const double>> segments;
  segments.reserve(L - l + 1);
  for (std::size_t i = 0; i + l <= L; ++i) segments.emplace_back(w.samples.data() + i, l);
  return segments;
}

std::size_t default_ssm_window(double fs) {
  return static_cast<std::size_t>(std::lround(1.5 * fs));
}

SelfSimilarityMatrix compute_ssm(const Waveform& w, std::size_t l, const SsmOptions& opts) {
  const std::size_t L = w.length();
  if (l == 0 || l > L) throw InvalidWindowError("compute_ssm: window length must be in [1, L]");
  const std::size_t n = L - l + 1;

  // Optionally work on per-segment mean-centered values. Centering changes
  // segment contents, so the sliding-dot recurrences below operate on the
  // raw samples and centering falls back to direct evaluation.
  const bool center = opts.mean_center;

  std::vector<double> norm_sq(n, 0.0);
  std::vector<double> mean(n, 0.0);
  if (center) {
    for (std::size_t i = 0; i < n; ++i) {
      double m = 0.0;
      for (std::size_t t = 0; t < l; ++t) m += w.samples[i + t];
      mean[i] = m / static_cast<double>(l);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t t = 0; t < l; ++t) {
      const double v = w.samples[i + t] - (center ? mean[i] : 0.0);
      s += v * v;
    }
    norm_sq[i] = s;
  }
  bool any_nonzero = false;
  for (double s : norm_sq) {
    if (s > kZeroNormSq) {
      any_nonzero = true;
      break;
    }
  }
  if (!any_nonzero) throw DegenerateSignalError("compute_ssm: all segments have zero norm");

  SelfSimilarityMatrix ssm;
  ssm.order = n;
  ssm.window = l;
  ssm.entries.assign(n * n, 0.0);

  auto fill = [&](std::size_t i, std::size_t j, double dot) {
    double v = 0.0;
    if (norm_sq[i] > kZeroNormSq && norm_sq[j] > kZeroNormSq) {
      v = dot / std::sqrt(norm_sq[i] * norm_sq[j]);
      v = std::clamp(v, -1.0, 1.0);
    }
    ssm.entries[i * n + j] = v;
    ssm.entries[j * n + i] = v;
  };

  for (std::size_t i = 0; i < n; ++i) {
    ssm.entries[i * n + i] = norm_sq[i] > kZeroNormSq ? 1.0 : 0.0;
  }

  if (!center) {
    // Each diagonal k: dot(u_i, u_{i+k}) via a sliding update, O(L) per
    // diagonal instead of O(L l) direct evaluation.
    for (std::size_t k = 1; k < n; ++k) {
      double dot = 0.0;
      for (std::size_t t = 0; t < l; ++t) dot += w.samples[t] * w.samples[k + t];
      fill(0, k, dot);
      for (std::size_t i = 1; i + k < n; ++i) {
        dot += w.samples[i + l - 1] * w.samples[i + k + l - 1] - w.samples[i - 1] * w.samples[i + k - 1];
        fill(i, i + k, dot);
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t t = 0; t < l; ++t)
          dot += (w.samples[i + t] - mean[i]) * (w.samples[j + t] - mean[j]);
        fill(i, j, dot);
      }
    }
  }
  return ssm;
}

double ssm_similarity(const SelfSimilarityMatrix& m, const SelfSimilarityMatrix& m_a) {
  if (m.order != m_a.order) throw ShapeError("ssm_similarity: SSM orders differ");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    dot += m.entries[i] * m_a.entries[i];
    na += m.entries[i] * m.entries[i];
    nb += m_a.entries[i] * m_a.entries[i];
  }
  if (na < kZeroNormSq || nb < kZeroNormSq)
    throw DegenerateSignalError("ssm_similarity: zero-norm self-similarity matrix");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

AugmentParams draw_augment_params(const AugmentPolicy& policy, double fs, int rows, RngStream& rng) {
  policy.validate();
  AugmentParams p;
  const auto max_shift = static_cast<std::int64_t>(std::lround(policy.max_shift_s * fs));
  p.shift_samples = max_shift > 0 ? static_cast<int>(rng.uniform_int(-max_shift, max_shift)) : 0;
  if (policy.permute_rows && rows > 1) {
    p.row_order.resize(static_cast<std::size_t>(rows));
    std::iota(p.row_order.begin(), p.row_order.end(), 0);
    rng.shuffle(p.row_order);
  }
  p.noise_sigma = policy.noise_sigma;
  return p;
}

SpatioTemporalMap apply_augment(const SpatioTemporalMap& x, const AugmentParams& params, RngStream& rng) {
  const int T = x.time_steps();
  const int S = x.rows();
  const int C = x.channels();
  SpatioTemporalMap out(T, S, C, x.fs());
  const int shift = ((params.shift_samples % T) + T) % T;
  for (int t = 0; t < T; ++t) {
    const int src_t = (t - shift + T) % T;
    for (int s = 0; s < S; ++s) {
      const int src_s = params.row_order.empty() ? s : params.row_order[static_cast<std::size_t>(s)];
      for (int c = 0; c < C; ++c) out.at(t, s, c) = x.at(src_t, src_s, c);
    }
  }
  if (params.noise_sigma > 0.0) {
    for (float& v : out.values()) v += static_cast<float>(params.noise_sigma * rng.normal());
  }
  return out;
}

SpatioTemporalMap augment(const SpatioTemporalMap& x, const AugmentPolicy& policy, RngStream& rng) {
  const AugmentParams params = draw_augment_params(policy, x.fs(), x.rows(), rng);
  return apply_augment(x, params, rng);
}

Waveform shift_waveform(const Waveform& w, int shift_samples) {
  const auto L = static_cast<int>(w.length());
  const int shift = ((shift_samples % L) + L) % L;
  std::vector<double> out(w.length());
  for (int t = 0; t < L; ++t) out[static_cast<std::size_t>(t)] = w.samples[static_cast<std::size_t>((t - shift + L) % L)];
  return Waveform(std::move(out), w.fs);
}

}  // namespace fedhug::signal
