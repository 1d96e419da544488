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
#include "fedhug/spectrum.hpp"

#include <cmath>
#include <numbers>

#include "fedhug/errors.hpp"

namespace fedhug::spectrum {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw ShapeError("fft: size must be a nonzero power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }

  if (inverse) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv_n;
  }
}

SpectrumWorkspace analyze(std::span<const double> x, double fs, int pad_factor) {
  if (x.size() < 2) throw ShapeError("analyze: signal must have >= 2 samples");
  if (pad_factor < 1) throw DomainError("analyze: pad_factor must be >= 1");

  SpectrumWorkspace ws;
  ws.n_signal = x.size();
  ws.n_fft = next_pow2(ws.n_signal * static_cast<std::size_t>(pad_factor));
  ws.bin_hz = fs / static_cast<double>(ws.n_fft);

  ws.window.resize(ws.n_signal);
  const double denom = static_cast<double>(ws.n_signal - 1);
  for (std::size_t t = 0; t < ws.n_signal; ++t) {
    ws.window[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / denom);
  }

  ws.spectrum.assign(ws.n_fft, {0.0, 0.0});
  for (std::size_t t = 0; t < ws.n_signal; ++t) ws.spectrum[t] = {ws.window[t] * x[t], 0.0};
  fft(ws.spectrum);

  ws.power.resize(ws.n_fft / 2 + 1);
  for (std::size_t k = 0; k < ws.power.size(); ++k) ws.power[k] = std::norm(ws.spectrum[k]);
  return ws;
}

double SpectrumWorkspace::total_power() const {
  double s = 0.0;
  for (double p : power) s += p;
  return s;
}

BandBins band_bins(double bin_hz, std::size_t n_onesided, double f_lo, double f_hi) {
  if (!(f_lo > 0.0) || !(f_hi > f_lo)) throw DomainError("band_bins: need 0 < f_lo < f_hi");
  const auto lo = static_cast<std::size_t>(std::ceil(f_lo / bin_hz));
  auto hi = static_cast<std::size_t>(std::floor(f_hi / bin_hz));
  if (hi >= n_onesided) hi = n_onesided - 1;
  if (lo > hi) throw DomainError("band_bins: band contains no bins at this resolution");
  return BandBins{lo, hi};
}

std::vector<double> power_gradient_to_signal(const SpectrumWorkspace& ws,
                                             std::span<const double> g_power) {
  if (g_power.size() != ws.power.size())
    throw ShapeError("power_gradient_to_signal: gradient size does not match one-sided bin count");

  // d p_k / d v_t = 2 Re(conj(X_k) e^{-i 2 pi k t / N}), so the adjoint is a
  // forward DFT of c_k = g_k conj(X_k) (zero outside the one-sided range).
  std::vector<std::complex<double>> c(ws.n_fft, {0.0, 0.0});
  for (std::size_t k = 0; k < g_power.size(); ++k) c[k] = g_power[k] * std::conj(ws.spectrum[k]);
  fft(c);

  std::vector<double> g_signal(ws.n_signal);
  for (std::size_t t = 0; t < ws.n_signal; ++t) g_signal[t] = 2.0 * c[t].real() * ws.window[t];
  return g_signal;
}

}  // namespace fedhug::spectrum
