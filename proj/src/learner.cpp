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
#include "fedhug/learner.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "fedhug/errors.hpp"
#include "fedhug/spectrum.hpp"

namespace fedhug::learner {

namespace {

constexpr double kMinTotalPower = 1e-12;
constexpr double kVariationFloor = 1e-12;
constexpr double kFeatureNormFloor = 1e-12;

struct ForwardTrace {
  std::vector<double> pooled;            // T
  std::vector<std::vector<double>> y;    // filters x T
  std::vector<double> signal;            // T
};

ForwardTrace forward_trace(const ModelParams& params, const signal::SpatioTemporalMap& x) {
  const ModelArch& a = params.arch;
  if (x.time_steps() != a.time_steps || x.rows() != a.rows || x.channels() != a.channels)
    throw ShapeError("forward: input shape does not match the architecture");

  const int T = a.time_steps;
  const int S = a.rows;
  const int C = a.channels;
  const double* pool = params.theta.data();
  const double* taps = params.theta.data() + a.pooling_count();

  ForwardTrace tr;
  tr.pooled.assign(static_cast<std::size_t>(T), 0.0);
  const auto& vals = x.values();
  for (int t = 0; t < T; ++t) {
    double acc = 0.0;
    const std::size_t base = static_cast<std::size_t>(t) * static_cast<std::size_t>(S) * static_cast<std::size_t>(C);
    for (int sc = 0; sc < S * C; ++sc) acc += pool[sc] * static_cast<double>(vals[base + static_cast<std::size_t>(sc)]);
    tr.pooled[static_cast<std::size_t>(t)] = acc;
  }

  tr.y.assign(static_cast<std::size_t>(a.filters), std::vector<double>(static_cast<std::size_t>(T), 0.0));
  tr.signal.assign(static_cast<std::size_t>(T), 0.0);
  for (int f = 0; f < a.filters; ++f) {
    const double* h = taps + static_cast<std::size_t>(f) * static_cast<std::size_t>(a.taps);
    auto& yf = tr.y[static_cast<std::size_t>(f)];
    for (int t = 0; t < T; ++t) {
      double acc = 0.0;
      for (int k = 0; k < a.active_taps; ++k) acc += h[k] * tr.pooled[static_cast<std::size_t>((t - k + T) % T)];
      yf[static_cast<std::size_t>(t)] = acc;
      tr.signal[static_cast<std::size_t>(t)] += acc;
    }
  }
  return tr;
}

vmf::UnitVector feature_from_trace(const ModelArch& a, const ForwardTrace& tr, bool* degenerate) {
  const int T = a.time_steps;
  std::vector<double> raw(static_cast<std::size_t>(a.feature_dim()), 0.0);
  for (int f = 0; f < a.filters; ++f) {
    const auto& yf = tr.y[static_cast<std::size_t>(f)];
    double energy = 0.0;
    double diff_energy = 0.0;
    for (int t = 0; t < T; ++t) {
      const double v = yf[static_cast<std::size_t>(t)];
      const double d = v - yf[static_cast<std::size_t>((t - 1 + T) % T)];
      energy += v * v;
      diff_energy += d * d;
    }
    raw[static_cast<std::size_t>(f)] = energy;
    raw[static_cast<std::size_t>(a.filters + f)] = diff_energy;
  }
  double norm = 0.0;
  for (double v : raw) norm += v * v;
  norm = std::sqrt(norm);
  if (norm < kFeatureNormFloor) {
    std::vector<double> basis(static_cast<std::size_t>(a.feature_dim()), 0.0);
    basis[0] = 1.0;
    if (degenerate) *degenerate = true;
    return vmf::UnitVector(std::move(basis));
  }
  for (double& v : raw) v /= norm;
  if (degenerate) *degenerate = false;
  return vmf::UnitVector::normalized(std::move(raw));
}

// Accumulates dL/dtheta given dL/dsignal for one sample.
void backprop_signal(const ModelParams& params, const signal::SpatioTemporalMap& x,
                     const ForwardTrace& tr, const std::vector<double>& g_signal,
                     std::vector<double>& g_theta) {
  const ModelArch& a = params.arch;
  const int T = a.time_steps;
  const int S = a.rows;
  const int C = a.channels;
  const double* taps = params.theta.data() + a.pooling_count();
  double* g_pool = g_theta.data();
  double* g_taps = g_theta.data() + a.pooling_count();

  std::vector<double> g_pooled(static_cast<std::size_t>(T), 0.0);
  for (int f = 0; f < a.filters; ++f) {
    const double* h = taps + static_cast<std::size_t>(f) * static_cast<std::size_t>(a.taps);
    double* gh = g_taps + static_cast<std::size_t>(f) * static_cast<std::size_t>(a.taps);
    // signal = sum_f y_f, so dL/dy_f = dL/dsignal.
    for (int k = 0; k < a.active_taps; ++k) {
      double acc = 0.0;
      for (int t = 0; t < T; ++t) acc += g_signal[static_cast<std::size_t>(t)] * tr.pooled[static_cast<std::size_t>((t - k + T) % T)];
      gh[k] += acc;
    }
    for (int tau = 0; tau < T; ++tau) {
      double acc = 0.0;
      for (int k = 0; k < a.active_taps; ++k) acc += h[k] * g_signal[static_cast<std::size_t>((tau + k) % T)];
      g_pooled[static_cast<std::size_t>(tau)] += acc;
    }
  }

  const auto& vals = x.values();
  for (int t = 0; t < T; ++t) {
    const double g = g_pooled[static_cast<std::size_t>(t)];
    if (g == 0.0) continue;
    const std::size_t base = static_cast<std::size_t>(t) * static_cast<std::size_t>(S) * static_cast<std::size_t>(C);
    for (int sc = 0; sc < S * C; ++sc) g_pool[sc] += g * static_cast<double>(vals[base + static_cast<std::size_t>(sc)]);
  }
}

struct SampleSpectral {
  spectrum::SpectrumWorkspace ws;
  double total = 0.0;
  double inband = 0.0;
  double peak_power = 0.0;
  std::size_t peak_lo = 0, peak_hi = 0;  // in-band window around the peak bin
  double bandwidth = 0.0;
  double sparsity = 0.0;
};

SampleSpectral sample_spectral(const std::vector<double>& sig, double fs, const FrequencyBand& band) {
  SampleSpectral s;
  s.ws = spectrum::analyze(sig, fs);
  s.total = s.ws.total_power();
  if (s.total < kMinTotalPower) throw DegenerateSpectrumError("unsup_loss: sample with (near-)zero total power");
  const auto bins = spectrum::band_bins(s.ws.bin_hz, s.ws.power.size(), band.f_lo, band.f_hi);
  double inband = 0.0;
  std::size_t peak = bins.lo;
  for (std::size_t k = bins.lo; k <= bins.hi; ++k) {
    inband += s.ws.power[k];
    if (s.ws.power[k] > s.ws.power[peak]) peak = k;
  }
  s.inband = inband;
  const auto w = static_cast<std::size_t>(std::lround(kPeakHalfWidthHz / s.ws.bin_hz));
  s.peak_lo = peak >= bins.lo + w ? peak - w : bins.lo;
  s.peak_hi = std::min(peak + w, bins.hi);
  for (std::size_t k = s.peak_lo; k <= s.peak_hi; ++k) s.peak_power += s.ws.power[k];
  s.bandwidth = (s.total - s.inband) / s.total;
  s.sparsity = s.inband > 0.0 ? 1.0 - s.peak_power / s.inband : 1.0;
  return s;
}

double variation_loss(const std::vector<double>& mean_band_spectrum) {
  const double B = static_cast<double>(mean_band_spectrum.size());
  double loss = 0.0;
  for (double q : mean_band_spectrum) {
    const double r = (q + kVariationFloor) / (1.0 + B * kVariationFloor);
    loss += r * std::log(r * B);
  }
  return loss;
}

void check_band(const FrequencyBand& band, double fs) { band.validate(fs); }

}  // namespace

void ModelArch::validate() const {
  if (time_steps < 2 || rows < 1 || channels < 1) throw ShapeError("ModelArch: invalid input shape");
  if (filters < 1 || taps < 1) throw ShapeError("ModelArch: need at least one filter and one tap");
  if (active_taps < 1 || active_taps > taps) throw ShapeError("ModelArch: active_taps out of range");
}

void ModelParams::validate() const {
  arch.validate();
  if (theta.size() != arch.param_count()) throw ShapeError("ModelParams: theta size does not match arch");
  for (double v : theta) {
    if (!std::isfinite(v)) throw DomainError("ModelParams: non-finite parameter");
  }
}

void FrequencyBand::validate(double fs) const {
  if (!(0.0 < f_lo && f_lo < f_hi && f_hi < 0.5 * fs))
    throw DomainError("FrequencyBand: need 0 < f_lo < f_hi < fs/2");
}

ModelParams zero_params(const ModelArch& arch) {
  arch.validate();
  return ModelParams{arch, std::vector<double>(arch.param_count(), 0.0)};
}

ModelParams identity_params(const ModelArch& arch) {
  ModelParams p = zero_params(arch);
  for (int s = 0; s < arch.rows; ++s)
    p.theta[static_cast<std::size_t>(s) * static_cast<std::size_t>(arch.channels)] = 1.0 / arch.rows;
  for (int f = 0; f < arch.filters; ++f) {
    p.theta[arch.pooling_count() + static_cast<std::size_t>(f) * static_cast<std::size_t>(arch.taps)] =
        1.0 / arch.filters;
  }
  return p;
}

ModelParams init_params(const ModelArch& arch, const FrequencyBand& band, double fs, RngStream& rng) {
  check_band(band, fs);
  ModelParams p = zero_params(arch);
  const double pool_w = 1.0 / static_cast<double>(arch.pooling_count());
  for (std::size_t i = 0; i < arch.pooling_count(); ++i) p.theta[i] = pool_w;

  const int K = arch.active_taps;
  for (int f = 0; f < arch.filters; ++f) {
    const double fc = band.f_lo + (f + 0.5) * (band.f_hi - band.f_lo) / arch.filters;
    double* h = p.theta.data() + arch.pooling_count() + static_cast<std::size_t>(f) * static_cast<std::size_t>(arch.taps);
    const double mid = 0.5 * (K - 1);
    for (int k = 0; k < K; ++k) {
      const double hann = K > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / (K - 1)) : 1.0;
      h[k] = std::cos(2.0 * std::numbers::pi * fc * (k - mid) / fs) * hann;
    }
    // Unit gain at the center frequency, split evenly across the bank.
    std::complex<double> gain(0.0, 0.0);
    for (int k = 0; k < K; ++k)
      gain += h[k] * std::exp(std::complex<double>(0.0, -2.0 * std::numbers::pi * fc * k / fs));
    const double g = std::abs(gain);
    const double scale = g > 1e-12 ? 1.0 / (g * arch.filters) : 1.0;
    for (int k = 0; k < K; ++k) h[k] = h[k] * scale + 0.01 * scale * rng.normal();
  }
  return p;
}

PredictedOutput forward(const ModelParams& params, const signal::SpatioTemporalMap& x) {
  params.validate();
  const ForwardTrace tr = forward_trace(params, x);
  bool degenerate = false;
  vmf::UnitVector feature = feature_from_trace(params.arch, tr, &degenerate);
  return PredictedOutput{signal::Waveform(tr.signal, x.fs()), std::move(feature), degenerate};
}

LossBreakdown unsup_loss(const std::vector<PredictedOutput>& batch, const FrequencyBand& band,
                         const LossWeights& weights) {
  if (batch.empty()) throw EmptyBatchError("unsup_loss: empty batch");
  const double fs = batch.front().signal.fs;
  const std::size_t len = batch.front().signal.length();
  check_band(band, fs);

  LossBreakdown out;
  std::vector<double> mean_band;
  for (const auto& pred : batch) {
    if (pred.signal.fs != fs || pred.signal.length() != len)
      throw ShapeError("unsup_loss: predictions differ in length or sampling rate");
    const SampleSpectral s = sample_spectral(pred.signal.samples, fs, band);
    out.bandwidth += s.bandwidth;
    out.sparsity += s.sparsity;
    const auto bins = spectrum::band_bins(s.ws.bin_hz, s.ws.power.size(), band.f_lo, band.f_hi);
    if (mean_band.empty()) mean_band.assign(bins.count(), 0.0);
    for (std::size_t k = bins.lo; k <= bins.hi; ++k)
      mean_band[k - bins.lo] += s.inband > 0.0 ? s.ws.power[k] / s.inband : 0.0;
  }
  const double n = static_cast<double>(batch.size());
  out.bandwidth /= n;
  out.sparsity /= n;
  for (double& q : mean_band) q /= n;
  out.variation = variation_loss(mean_band);
  out.total = weights.bandwidth * out.bandwidth + weights.sparsity * out.sparsity +
              weights.variation * out.variation;
  return out;
}

BatchEval eval_batch(const ModelParams& params,
                     const std::vector<const signal::SpatioTemporalMap*>& batch,
                     const FrequencyBand& band, double scale, const LossWeights& weights) {
  params.validate();
  if (batch.empty()) throw EmptyBatchError("eval_batch: empty batch");
  if (!(scale > 0.0)) throw DomainError("eval_batch: scale must be > 0");
  const double fs = batch.front()->fs();
  check_band(band, fs);

  const std::size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<ForwardTrace> traces;
  std::vector<SampleSpectral> spectral;
  traces.reserve(n);
  spectral.reserve(n);

  BatchEval ev;
  ev.grad.assign(params.theta.size(), 0.0);
  ev.features.reserve(n);

  std::vector<double> mean_band;
  spectrum::BandBins bins{};
  for (const auto* x : batch) {
    traces.push_back(forward_trace(params, *x));
    bool degen = false;
    ev.features.push_back(feature_from_trace(params.arch, traces.back(), &degen));
    if (degen) ++ev.degenerate_features;
    spectral.push_back(sample_spectral(traces.back().signal, fs, band));
    const auto& s = spectral.back();
    bins = spectrum::band_bins(s.ws.bin_hz, s.ws.power.size(), band.f_lo, band.f_hi);
    if (mean_band.empty()) mean_band.assign(bins.count(), 0.0);
    for (std::size_t k = bins.lo; k <= bins.hi; ++k)
      mean_band[k - bins.lo] += s.inband > 0.0 ? s.ws.power[k] / s.inband : 0.0;
    ev.loss.bandwidth += s.bandwidth * inv_n;
    ev.loss.sparsity += s.sparsity * inv_n;
  }
  for (double& q : mean_band) q *= inv_n;
  ev.loss.variation = variation_loss(mean_band);
  ev.loss.total = weights.bandwidth * ev.loss.bandwidth + weights.sparsity * ev.loss.sparsity +
                  weights.variation * ev.loss.variation;

  const double B = static_cast<double>(mean_band.size());
  // dL_var / d mean_band[k], shared by all samples.
  std::vector<double> g_mean(mean_band.size());
  for (std::size_t k = 0; k < mean_band.size(); ++k) {
    const double r = (mean_band[k] + kVariationFloor) / (1.0 + B * kVariationFloor);
    g_mean[k] = (std::log(r * B) + 1.0) / (1.0 + B * kVariationFloor);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = spectral[i];
    std::vector<double> g_power(s.ws.power.size(), 0.0);

    // bandwidth: ([k out of band] - bw_i) / total, averaged over the batch
    const double gb = weights.bandwidth * inv_n / s.total;
    for (std::size_t k = 0; k < g_power.size(); ++k) {
      const bool in_band = bins.contains(k);
      g_power[k] += gb * ((in_band ? 0.0 : 1.0) - s.bandwidth);
    }

    // sparsity: d(1 - peak/inband) = peak/inband^2 on band bins, -1/inband on window bins
    if (s.inband > 0.0) {
      const double gs = weights.sparsity * inv_n;
      const double common = gs * s.peak_power / (s.inband * s.inband);
      for (std::size_t k = bins.lo; k <= bins.hi; ++k) g_power[k] += common;
      for (std::size_t k = s.peak_lo; k <= s.peak_hi; ++k) g_power[k] -= gs / s.inband;
    }

    // variation through q_i[k] = p[k]/inband_i
    if (s.inband > 0.0) {
      double dot = 0.0;
      for (std::size_t k = bins.lo; k <= bins.hi; ++k)
        dot += g_mean[k - bins.lo] * (s.ws.power[k] / s.inband);
      const double gv = weights.variation * inv_n / s.inband;
      for (std::size_t k = bins.lo; k <= bins.hi; ++k)
        g_power[k] += gv * (g_mean[k - bins.lo] - dot);
    }

    for (double& g : g_power) g *= scale;
    const std::vector<double> g_signal = spectrum::power_gradient_to_signal(s.ws, g_power);
    backprop_signal(params, *batch[i], traces[i], g_signal, ev.grad);
  }
  return ev;
}

std::vector<double> grad(const ModelParams& params,
                         const std::vector<const signal::SpatioTemporalMap*>& batch,
                         const FrequencyBand& band, double scale, const LossWeights& weights) {
  return eval_batch(params, batch, band, scale, weights).grad;
}

ModelParams local_update(const ModelParams& params,
                         const std::vector<const signal::SpatioTemporalMap*>& batch,
                         const FrequencyBand& band, double lr, double v_kl,
                         const LossWeights& weights) {
  if (!(lr > 0.0)) throw DomainError("local_update: learning rate must be > 0");
  const std::vector<double> g = grad(params, batch, band, 1.0, weights);
  ModelParams out = params;
  for (std::size_t i = 0; i < out.theta.size(); ++i) out.theta[i] -= lr * v_kl * g[i];
  return out;
}

double supervised_loss(const signal::Waveform& pred, const signal::Waveform& gt) {
  if (pred.length() != gt.length()) throw ShapeError("supervised_loss: length mismatch");
  const std::size_t n = pred.length();
  double mp = 0.0, mg = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    mp += pred.samples[t];
    mg += gt.samples[t];
  }
  mp /= static_cast<double>(n);
  mg /= static_cast<double>(n);
  double spg = 0.0, spp = 0.0, sgg = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double cp = pred.samples[t] - mp;
    const double cg = gt.samples[t] - mg;
    spg += cp * cg;
    spp += cp * cp;
    sgg += cg * cg;
  }
  if (spp < 1e-24 || sgg < 1e-24) throw DegenerateSignalError("supervised_loss: zero-variance waveform");
  return 1.0 - spg / std::sqrt(spp * sgg);
}

SupervisedEval eval_supervised_batch(const ModelParams& params,
                                     const std::vector<const signal::SpatioTemporalMap*>& inputs,
                                     const std::vector<const signal::Waveform*>& targets) {
  params.validate();
  if (inputs.empty() || inputs.size() != targets.size())
    throw ShapeError("eval_supervised_batch: inputs/targets mismatch");
  const double inv_n = 1.0 / static_cast<double>(inputs.size());

  SupervisedEval ev;
  ev.grad.assign(params.theta.size(), 0.0);
  const int T = params.arch.time_steps;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const ForwardTrace tr = forward_trace(params, *inputs[i]);
    const auto& gt = targets[i]->samples;
    if (gt.size() != static_cast<std::size_t>(T)) throw ShapeError("eval_supervised_batch: target length mismatch");

    double mp = 0.0, mg = 0.0;
    for (int t = 0; t < T; ++t) {
      mp += tr.signal[static_cast<std::size_t>(t)];
      mg += gt[static_cast<std::size_t>(t)];
    }
    mp /= T;
    mg /= T;
    double spg = 0.0, spp = 0.0, sgg = 0.0;
    for (int t = 0; t < T; ++t) {
      const double cp = tr.signal[static_cast<std::size_t>(t)] - mp;
      const double cg = gt[static_cast<std::size_t>(t)] - mg;
      spg += cp * cg;
      spp += cp * cp;
      sgg += cg * cg;
    }
    if (spp < 1e-24 || sgg < 1e-24) throw DegenerateSignalError("eval_supervised_batch: zero-variance waveform");
    const double denom = std::sqrt(spp * sgg);
    const double r = spg / denom;
    ev.loss += (1.0 - r) * inv_n;

    std::vector<double> g_signal(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
      const double cp = tr.signal[static_cast<std::size_t>(t)] - mp;
      const double cg = gt[static_cast<std::size_t>(t)] - mg;
      g_signal[static_cast<std::size_t>(t)] = -inv_n * (cg - (spg / spp) * cp) / denom;
    }
    backprop_signal(params, *inputs[i], tr, g_signal, ev.grad);
  }
  return ev;
}

double estimate_hr(const signal::Waveform& w, const FrequencyBand& band) {
  check_band(band, w.fs);
  const auto ws = spectrum::analyze(w.samples, w.fs);
  if (ws.total_power() < 1e-300) throw DegenerateSpectrumError("estimate_hr: zero-power signal");
  const auto bins = spectrum::band_bins(ws.bin_hz, ws.power.size(), band.f_lo, band.f_hi);
  std::size_t peak = bins.lo;
  for (std::size_t k = bins.lo; k <= bins.hi; ++k) {
    if (ws.power[k] > ws.power[peak]) peak = k;
  }
  if (ws.power[peak] < 1e-300) throw DegenerateSpectrumError("estimate_hr: no in-band power");

  double delta = 0.0;
  if (peak > 0 && peak + 1 < ws.power.size()) {
    const double pm = ws.power[peak - 1];
    const double p0 = ws.power[peak];
    const double pp = ws.power[peak + 1];
    const double denom = pm - 2.0 * p0 + pp;
    if (std::abs(denom) > 1e-300) delta = std::clamp(0.5 * (pm - pp) / denom, -0.5, 0.5);
  }
  return 60.0 * (static_cast<double>(peak) + delta) * ws.bin_hz;
}

AdamOptimizer::AdamOptimizer(std::size_t param_count, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(param_count, 0.0), v_(param_count, 0.0) {}

void AdamOptimizer::step(std::vector<double>& theta, const std::vector<double>& gradient) {
  if (theta.size() != m_.size() || gradient.size() != m_.size())
    throw ShapeError("AdamOptimizer: size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * gradient[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * gradient[i] * gradient[i];
    theta[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
  }
}

}  // namespace fedhug::learner
