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

namespace fedhug::vmf {

/// Ceiling applied to every mean resultant length before concentration
/// estimation; the estimator has a pole at 1.
inline constexpr double kRbarCeiling = 1.0 - 1e-9;

/// Point on the unit hypersphere S^{d-1}, d >= 2. Norm checked to 1e-6.
class UnitVector {
 public:
  explicit UnitVector(std::vector<double> components);

  /// Normalizes an arbitrary nonzero vector onto the sphere.
  static UnitVector normalized(std::vector<double> v);

  const std::vector<double>& components() const { return c_; }
  int dim() const { return static_cast<int>(c_.size()); }
  double dot(const UnitVector& other) const;

 private:
  struct Unchecked {};
  UnitVector(std::vector<double> components, Unchecked) : c_(std::move(components)) {}

  std::vector<double> c_;

  friend std::vector<UnitVector> sample_vmf(const struct VmfParams&, std::size_t, RngStream&);
};

/// Mean direction and concentration of a von Mises-Fisher distribution.
struct VmfParams {
  UnitVector mu;
  double kappa = 0.0;  // finite, >= 0
};

/// Sufficient statistics of one batch of unit feature vectors.
struct BatchStats {
  UnitVector mu;
  double r_bar = 0.0;  // in [0, kRbarCeiling]
  std::uint64_t n = 0;
};

/// Server-side running estimate of the global feature distribution.
///
/// Internally the state keeps the exact sample-size-weighted sums
/// (sum n_i mu_i, sum n_i r_bar_i) so that fusing batches one at a time is
/// bit-identical to pooling them; mu()/r_bar()/kappa() are derived views.
/// n_total() == 0 means uninitialized: mu() is undefined and the first
/// update installs the batch verbatim.
class GlobalDistState {
 public:
  GlobalDistState() = default;

  /// Rebuilds a state from persisted accumulators (checkpoint resume).
  static GlobalDistState from_accumulators(std::vector<double> mu_weighted_sum,
                                           double r_weighted_sum, std::uint64_t n_total);

  bool initialized() const { return n_total_ > 0; }
  UnitVector mu() const;
  double r_bar() const;
  double kappa() const;
  std::uint64_t n_total() const { return n_total_; }
  int dim() const { return static_cast<int>(mu_sum_.size()); }

  const std::vector<double>& mu_weighted_sum() const { return mu_sum_; }
  double r_weighted_sum() const { return r_sum_; }

 private:
  std::vector<double> mu_sum_;
  double r_sum_ = 0.0;
  std::uint64_t n_total_ = 0;

  friend GlobalDistState update_global(const GlobalDistState&, const BatchStats&);
};

/// Maximum-likelihood direction and resultant length of a batch.
/// Throws EmptyBatchError / ShapeError / DegenerateResultantError.
BatchStats estimate_batch_stats(const std::vector<UnitVector>& features);

/// Concentration from mean resultant length: R(d - R^2)/(1 - R^2).
/// r_bar is clamped to kRbarCeiling from above; negative values are a
/// DomainError.
double kappa_from_rbar(double r_bar, int d);

/// A_d(kappa) = I_{d/2}(kappa) / I_{d/2-1}(kappa), in [0, 1).
double bessel_ratio_a_d(double kappa, int d);

/// log of the vMF normalizer C_d(kappa) = kappa^{d/2-1} /
/// ((2 pi)^{d/2} I_{d/2-1}(kappa)); continuous at kappa -> 0 where it
/// equals -log(area of S^{d-1}).
double log_c_d(double kappa, int d);

/// Online fusion of one batch into the running global state.
GlobalDistState update_global(const GlobalDistState& state, const BatchStats& batch);

/// KL divergence between two vMF distributions on the same sphere:
///   log C_d(k_l) - log C_d(k_g) + (k_l - k_g mu_g.mu_l) A_d(k_l).
/// Tiny negative rounding (> -1e-9) is clamped to 0.
double kl_divergence(const VmfParams& local, const VmfParams& global);

enum class VklForm {
  kLogistic,  // 1 + 1/(1 + exp(-(D - sigma)/gamma)), image in (1, 2)
  kPrinted,   // 1 + exp((D - sigma)/gamma), unbounded
};

/// Loss multiplier derived from the KL divergence. The logistic form clamps
/// saturated values to the open interval (1, 2).
double vkl_weight(double d_kl, double sigma, double gamma, VklForm form = VklForm::kLogistic);

/// i.i.d. vMF samples (Wood-style rejection around the pole, then a
/// Householder reflection onto mu). kappa = 0 yields uniform sphere samples.
std::vector<UnitVector> sample_vmf(const VmfParams& params, std::size_t n, RngStream& rng);

}  // namespace fedhug::vmf
