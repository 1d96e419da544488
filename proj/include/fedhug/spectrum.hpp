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

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace fedhug::spectrum {

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& a, bool inverse = false);

std::size_t next_pow2(std::size_t n);

/// Hann-windowed, zero-padded one-sided periodogram plus everything needed
/// to push gradients in bin space back to the time samples.
struct SpectrumWorkspace {
  std::size_t n_signal = 0;
  std::size_t n_fft = 0;
  double bin_hz = 0.0;
  std::vector<double> window;                  // length n_signal
  std::vector<std::complex<double>> spectrum;  // full n_fft bins
  std::vector<double> power;                   // bins 0 .. n_fft/2

  double total_power() const;
};

/// n_fft = next_pow2(pad_factor * len(x)); pad_factor 4 gives enough bin
/// density for quadratic peak interpolation.
SpectrumWorkspace analyze(std::span<const double> x, double fs, int pad_factor = 4);

/// Inclusive one-sided bin range covering [f_lo, f_hi].
struct BandBins {
  std::size_t lo = 0;
  std::size_t hi = 0;

  std::size_t count() const { return hi - lo + 1; }
  bool contains(std::size_t k) const { return k >= lo && k <= hi; }
};

BandBins band_bins(double bin_hz, std::size_t n_onesided, double f_lo, double f_hi);

/// Gradient of sum_k g_power[k] * power[k] with respect to the original
/// time samples (adjoint of window + pad + DFT + |.|^2). g_power must have
/// one entry per one-sided bin.
std::vector<double> power_gradient_to_signal(const SpectrumWorkspace& ws,
                                             std::span<const double> g_power);

}  // namespace fedhug::spectrum
