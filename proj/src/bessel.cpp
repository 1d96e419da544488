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
#include "fedhug/bessel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "fedhug/errors.hpp"

namespace fedhug::bessel {

namespace {

constexpr double kTiny = 1e-300;
constexpr int kMaxCfIterations = 20'000'000;

// Tail sum of the large-argument expansion:
//   I_nu(x) ~ e^x / sqrt(2 pi x) * S(nu, x),
//   S = sum_k (-1)^k a_k / x^k,  a_k = prod_{j=1..k} (mu - (2j-1)^2) / (k! 8^k),
// with mu = 4 nu^2. Summed to the smallest term (classic asymptotic rule).
double asymptotic_tail(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double sum = 1.0;
  double term = 1.0;
  double prev_abs = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 60; ++k) {
    const double j = 2.0 * k - 1.0;
    term *= -(mu - j * j) / (8.0 * x * k);
    const double a = std::abs(term);
    if (a >= prev_abs) break;  // divergent tail reached
    sum += term;
    if (a < 1e-17 * std::abs(sum)) break;
    prev_abs = a;
  }
  return sum;
}

// Gauss continued fraction for t = I_nu(x)/I_{nu-1}(x):
//   t = 1 / (2 nu / x + 1 / (2 (nu+1) / x + ...)),
// evaluated with the modified Lentz algorithm.
double ratio_continued_fraction(double nu, double x) {
  double f = kTiny;
  double c = f;
  double d = 0.0;
  for (int k = 1; k <= kMaxCfIterations; ++k) {
    const double b = 2.0 * (nu + k - 1) / x;
    d = b + d;
    if (d == 0.0) d = kTiny;
    c = b + 1.0 / c;
    if (c == 0.0) c = kTiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) return f;
  }
  throw Error("bessel ratio continued fraction failed to converge");
}

// log of S = sum_k c_k with c_0 = 1, c_{k+1} = c_k * (x^2/4) / ((k+1)(nu+k+1)).
// All terms positive, so the sum is rescaled whenever it grows large and the
// shed factor is carried in log space.
double log_series_sum(double nu, double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  double log_scale = 0.0;
  for (int k = 0; k < kMaxCfIterations; ++k) {
    term *= q / ((k + 1.0) * (nu + k + 1.0));
    sum += term;
    if (term < 1e-17 * sum) break;
    if (sum > 1e280) {
      sum *= 1e-280;
      term *= 1e-280;
      log_scale += 280.0 * std::numbers::ln10;
    }
  }
  return std::log(sum) + log_scale;
}

}  // namespace

double asymptotic_cutoff(double nu) { return std::max(64.0, 4.0 * nu * nu); }

double ratio_i(double nu, double x) {
  if (!(nu >= 0.5)) throw DomainError("ratio_i: order must be >= 0.5");
  if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("ratio_i: argument must be finite and >= 0");
  if (x == 0.0) return 0.0;
  if (x < asymptotic_cutoff(nu)) return ratio_continued_fraction(nu, x);
  return asymptotic_tail(nu, x) / asymptotic_tail(nu - 1.0, x);
}

double log_i(double nu, double x) {
  if (!(nu >= 0.0)) throw DomainError("log_i: order must be >= 0");
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("log_i: argument must be finite and > 0");
  if (x < asymptotic_cutoff(nu)) {
    // I_nu(x) = (x/2)^nu / Gamma(nu+1) * S
    return nu * std::log(0.5 * x) - std::lgamma(nu + 1.0) + log_series_sum(nu, x);
  }
  const double tail = asymptotic_tail(nu, x);
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(tail);
}

}  // namespace fedhug::bessel
