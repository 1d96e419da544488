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
#include <optional>
#include <vector>

#include "fedhug/learner.hpp"
#include "fedhug/synth.hpp"

namespace fedhug::metrics {

/// HR error metrics over (predicted, ground-truth) pairs. SD is the
/// standard deviation of the absolute errors; Pearson is computed across
/// samples between predicted and true HR.
struct EvalResult {
  double mae = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  double pearson = 0.0;
  /// True when either HR series had zero variance and pearson was reported
  /// as 0 by convention.
  bool pearson_degenerate = false;
  std::size_t n = 0;
  std::size_t excluded = 0;  // samples dropped for degenerate spectra
};

/// Per-interval MAE, with the two tails defined by the 10th/90th
/// percentiles of the pooled ground-truth HR.
struct TailReport {
  struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;
    std::optional<double> mae;  // absent when the interval is empty
  };

  std::vector<Interval> intervals;  // fixed-width bins over the observed range
  double tail_lo_edge = 0.0;        // 10th percentile
  double tail_hi_edge = 0.0;        // 90th percentile
  Interval low_tail;                // gt < tail_lo_edge
  Interval high_tail;               // gt > tail_hi_edge
};

struct SDistribution {
  std::vector<double> bin_edges;   // over [-1, 1]
  std::vector<std::uint64_t> counts;
  double mean = 0.0;
  double median = 0.0;
};

/// Metrics from raw (pred, gt) pairs; basis for evaluate().
EvalResult compute_metrics(const std::vector<double>& pred_hr, const std::vector<double>& gt_hr,
                           std::size_t excluded = 0);

/// Predicts HR per sample via forward + estimate_hr, then computes the
/// metrics. Samples with degenerate spectra are excluded and counted;
/// more than 10% exclusions is an EvalIntegrityError.
EvalResult evaluate(const learner::ModelParams& model, const std::vector<synth::SyntheticSample>& dataset,
                    const learner::FrequencyBand& band);

/// Per-interval analysis; needs >= 10 pairs. bin_width_bpm defaults to 10.
TailReport tail_report(const std::vector<double>& pred_hr, const std::vector<double>& gt_hr,
                       double bin_width_bpm = 10.0);

/// Fixed-bin histogram of consistency scores over [-1, 1].
SDistribution s_distribution(const std::vector<double>& values, std::size_t bins = 40);

/// Linear-interpolated quantile (q in [0, 1]) of a copy-sorted sample.
double quantile(std::vector<double> values, double q);

}  // namespace fedhug::metrics
