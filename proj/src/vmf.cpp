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
#include "fedhug/vmf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fedhug/bessel.hpp"
#include "fedhug/errors.hpp"

namespace fedhug::vmf {

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite component");
  }
}

double log_sphere_area(int d) {
  // area of S^{d-1} = 2 pi^{d/2} / Gamma(d/2)
  return std::numbers::ln2 + 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d);
}

// Marsaglia-Tsang gamma sampler; the a < 1 case is boosted through a+1.
double sample_gamma(double a, RngStream& rng) {
  if (a < 1.0) {
    double u = rng.uniform();
    while (u <= 0.0) u = rng.uniform();
    return sample_gamma(a + 1.0, rng) * std::pow(u, 1.0 / a);
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    double x;
    double v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_beta_symmetric(double a, RngStream& rng) {
  const double x = sample_gamma(a, rng);
  const double y = sample_gamma(a, rng);
  return x / (x + y);
}

}  // namespace

UnitVector::UnitVector(std::vector<double> components) : c_(std::move(components)) {
  if (c_.size() < 2) throw ShapeError("UnitVector: dimension must be >= 2");
  check_finite(c_, "UnitVector");
  const double n = norm2(c_);
  if (std::abs(n - 1.0) > 1e-6) throw DomainError("UnitVector: norm deviates from 1 by more than 1e-6");
}

UnitVector UnitVector::normalized(std::vector<double> v) {
  if (v.size() < 2) throw ShapeError("UnitVector: dimension must be >= 2");
  check_finite(v, "UnitVector");
  const double n = norm2(v);
  if (n < 1e-12) throw DegenerateResultantError("UnitVector: cannot normalize a (near-)zero vector");
  for (double& x : v) x /= n;
  return UnitVector(std::move(v), Unchecked{});
}

double UnitVector::dot(const UnitVector& other) const {
  if (other.dim() != dim()) throw ShapeError("UnitVector::dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < c_.size(); ++i) s += c_[i] * other.c_[i];
  return s;
}

BatchStats estimate_batch_stats(const std::vector<UnitVector>& features) {
  if (features.empty()) throw EmptyBatchError("estimate_batch_stats: empty feature batch");
  const int d = features.front().dim();
  std::vector<double> sum(static_cast<std::size_t>(d), 0.0);
  for (const auto& v : features) {
    if (v.dim() != d) throw ShapeError("estimate_batch_stats: mixed dimensions in batch");
    const auto& c = v.components();
    for (int i = 0; i < d; ++i) sum[static_cast<std::size_t>(i)] += c[static_cast<std::size_t>(i)];
  }
  const double resultant = norm2(sum);
  if (resultant < 1e-12)
    throw DegenerateResultantError("estimate_batch_stats: zero resultant (balanced antipodal batch)");
  const auto n = static_cast<std::uint64_t>(features.size());
  const double r_bar = std::min(resultant / static_cast<double>(n), kRbarCeiling);
  return BatchStats{UnitVector::normalized(std::move(sum)), r_bar, n};
}

double kappa_from_rbar(double r_bar, int d) {
  if (d < 2) throw DomainError("kappa_from_rbar: d must be >= 2");
  if (!(r_bar >= 0.0)) throw DomainError("kappa_from_rbar: r_bar must be >= 0");
  const double r = std::min(r_bar, kRbarCeiling);
  const double r2 = r * r;
  return r * (d - r2) / (1.0 - r2);
}

double bessel_ratio_a_d(double kappa, int d) {
  if (d < 2) throw DomainError("bessel_ratio_a_d: d must be >= 2");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw DomainError("bessel_ratio_a_d: kappa must be finite and >= 0");
  if (kappa == 0.0) return 0.0;
  return bessel::ratio_i(0.5 * d, kappa);
}

double log_c_d(double kappa, int d) {
  if (d < 2) throw DomainError("log_c_d: d must be >= 2");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw DomainError("log_c_d: kappa must be finite and >= 0");
  // Limit value; for kappa below 1e-6 the correction is O(kappa^2) < 1e-12.
  if (kappa < 1e-6) return -log_sphere_area(d);
  const double nu = 0.5 * d - 1.0;
  return nu * std::log(kappa) - 0.5 * d * std::log(2.0 * std::numbers::pi) - bessel::log_i(nu, kappa);
}

GlobalDistState GlobalDistState::from_accumulators(std::vector<double> mu_weighted_sum,
                                                   double r_weighted_sum, std::uint64_t n_total) {
  if (n_total > 0 && mu_weighted_sum.size() < 2)
    throw ShapeError("GlobalDistState: accumulator dimension must be >= 2");
  check_finite(mu_weighted_sum, "GlobalDistState");
  GlobalDistState s;
  s.mu_sum_ = std::move(mu_weighted_sum);
  s.r_sum_ = r_weighted_sum;
  s.n_total_ = n_total;
  return s;
}

UnitVector GlobalDistState::mu() const {
  if (!initialized()) throw DomainError("GlobalDistState::mu: state is uninitialized");
  return UnitVector::normalized(mu_sum_);
}

double GlobalDistState::r_bar() const {
  if (!initialized()) throw DomainError("GlobalDistState::r_bar: state is uninitialized");
  return std::clamp(r_sum_ / static_cast<double>(n_total_), 0.0, kRbarCeiling);
}

double GlobalDistState::kappa() const { return kappa_from_rbar(r_bar(), dim()); }

GlobalDistState update_global(const GlobalDistState& state, const BatchStats& batch) {
  if (batch.n == 0) throw EmptyBatchError("update_global: batch has n = 0");
  const double w = static_cast<double>(batch.n);
  if (!state.initialized()) {
    GlobalDistState out;
    out.mu_sum_.resize(batch.mu.components().size());
    for (std::size_t i = 0; i < out.mu_sum_.size(); ++i) out.mu_sum_[i] = w * batch.mu.components()[i];
    out.r_sum_ = w * batch.r_bar;
    out.n_total_ = batch.n;
    return out;
  }
  if (batch.mu.dim() != state.dim()) throw ShapeError("update_global: dimension mismatch");
  GlobalDistState out;
  out.mu_sum_.resize(state.mu_sum_.size());
  for (std::size_t i = 0; i < out.mu_sum_.size(); ++i)
    out.mu_sum_[i] = state.mu_sum_[i] + w * batch.mu.components()[i];
  double n = 0.0;
  for (double x : out.mu_sum_) n += x * x;
  if (std::sqrt(n) < 1e-12)
    throw DegenerateFusionError("update_global: fused mean direction is numerically zero (opposed distributions)");
  out.r_sum_ = state.r_sum_ + w * batch.r_bar;
  out.n_total_ = state.n_total_ + batch.n;
  return out;
}

double kl_divergence(const VmfParams& local, const VmfParams& global) {
  if (local.mu.dim() != global.mu.dim()) throw ShapeError("kl_divergence: dimension mismatch");
  const int d = local.mu.dim();
  const double cos_angle = global.mu.dot(local.mu);
  double kl = log_c_d(local.kappa, d) - log_c_d(global.kappa, d) +
              (local.kappa - global.kappa * cos_angle) * bessel_ratio_a_d(local.kappa, d);
  if (kl < 0.0 && kl > -1e-9) kl = 0.0;
  return kl;
}

double vkl_weight(double d_kl, double sigma, double gamma, VklForm form) {
  if (!(gamma > 0.0)) throw DomainError("vkl_weight: gamma must be > 0");
  const double z = (d_kl - sigma) / gamma;
  if (form == VklForm::kPrinted) return 1.0 + std::exp(z);
  double v;
  if (z >= 0.0) {
    v = 1.0 + 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    v = 1.0 + e / (1.0 + e);
  }
  // Saturation would otherwise touch the closed endpoints in floating point;
  // clamp to the nearest representable interior values.
  constexpr double kLo = 0x1.0000000000001p+0;  // next double above 1.0
  constexpr double kHi = 0x1.fffffffffffffp+0;  // next double below 2.0
  return std::clamp(v, kLo, kHi);
}

std::vector<UnitVector> sample_vmf(const VmfParams& params, std::size_t n, RngStream& rng) {
  const int d = params.mu.dim();
  const double kappa = params.kappa;
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw DomainError("sample_vmf: kappa must be finite and >= 0");

  std::vector<UnitVector> out;
  out.reserve(n);

  if (kappa == 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> v(static_cast<std::size_t>(d));
      double norm = 0.0;
      do {
        norm = 0.0;
        for (double& x : v) {
          x = rng.normal();
          norm += x * x;
        }
        norm = std::sqrt(norm);
      } while (norm < 1e-12);
      for (double& x : v) x /= norm;
      out.push_back(UnitVector(std::move(v), UnitVector::Unchecked{}));
    }
    return out;
  }

  // Wood's rejection envelope for the radial coordinate around the pole e1.
  const double dm1 = static_cast<double>(d - 1);
  const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1)) / dm1;
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
  const double beta_a = 0.5 * dm1;

  // Householder reflection mapping e1 onto mu.
  const auto& mu = params.mu.components();
  std::vector<double> h(static_cast<std::size_t>(d), 0.0);
  h[0] = 1.0 - mu[0];
  for (int i = 1; i < d; ++i) h[static_cast<std::size_t>(i)] = -mu[static_cast<std::size_t>(i)];
  double h_norm2 = 0.0;
  for (double x : h) h_norm2 += x * x;
  const bool reflect = h_norm2 > 1e-24;

  for (std::size_t i = 0; i < n; ++i) {
    double w;
    for (;;) {
      const double z = sample_beta_symmetric(beta_a, rng);
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }

    // Tangential part: uniform on S^{d-2}.
    std::vector<double> v(static_cast<std::size_t>(d));
    double t_norm = 0.0;
    do {
      t_norm = 0.0;
      for (int j = 1; j < d; ++j) {
        const double g = rng.normal();
        v[static_cast<std::size_t>(j)] = g;
        t_norm += g * g;
      }
      t_norm = std::sqrt(t_norm);
    } while (t_norm < 1e-12);
    const double scale = std::sqrt(std::max(0.0, 1.0 - w * w)) / t_norm;
    v[0] = w;
    for (int j = 1; j < d; ++j) v[static_cast<std::size_t>(j)] *= scale;

    if (reflect) {
      double proj = 0.0;
      for (int j = 0; j < d; ++j) proj += h[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
      const double f = 2.0 * proj / h_norm2;
      for (int j = 0; j < d; ++j) v[static_cast<std::size_t>(j)] -= f * h[static_cast<std::size_t>(j)];
    }
    out.push_back(UnitVector(std::move(v), UnitVector::Unchecked{}));
  }
  return out;
}

}  // namespace fedhug::vmf
