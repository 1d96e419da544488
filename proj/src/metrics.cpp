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
#include "fedhug/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fedhug/errors.hpp"

namespace fedhug::metrics {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyBatchError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

EvalResult compute_metrics(const std::vector<double>& pred_hr, const std::vector<double>& gt_hr,
                           std::size_t excluded) {
  if (pred_hr.size() != gt_hr.size()) throw ShapeError("compute_metrics: size mismatch");
  if (pred_hr.empty()) throw EmptyBatchError("compute_metrics: no pairs");

  EvalResult r;
  r.n = pred_hr.size();
  r.excluded = excluded;

  std::vector<double> abs_err(pred_hr.size());
  double sum_abs = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < pred_hr.size(); ++i) {
    const double e = pred_hr[i] - gt_hr[i];
    abs_err[i] = std::abs(e);
    sum_abs += abs_err[i];
    sum_sq += e * e;
  }
  const double n = static_cast<double>(pred_hr.size());
  r.mae = sum_abs / n;
  r.rmse = std::sqrt(sum_sq / n);
  double var = 0.0;
  for (double a : abs_err) var += (a - r.mae) * (a - r.mae);
  r.sd = std::sqrt(var / n);

  if (pred_hr.size() >= 2) {
    double mp = 0.0, mg = 0.0;
    for (std::size_t i = 0; i < pred_hr.size(); ++i) {
      mp += pred_hr[i];
      mg += gt_hr[i];
    }
    mp /= n;
    mg /= n;
    double spg = 0.0, spp = 0.0, sgg = 0.0;
    for (std::size_t i = 0; i < pred_hr.size(); ++i) {
      spg += (pred_hr[i] - mp) * (gt_hr[i] - mg);
      spp += (pred_hr[i] - mp) * (pred_hr[i] - mp);
      sgg += (gt_hr[i] - mg) * (gt_hr[i] - mg);
    }
    if (spp < 1e-12 || sgg < 1e-12) {
      r.pearson = 0.0;
      r.pearson_degenerate = true;
    } else {
      r.pearson = std::clamp(spg / std::sqrt(spp * sgg), -1.0, 1.0);
    }
  } else {
    r.pearson = 0.0;
    r.pearson_degenerate = true;
  }
  return r;
}

EvalResult evaluate(const learner::ModelParams& model, const std::vector<synth::SyntheticSample>& dataset,
                    const learner::FrequencyBand& band) {
  if (dataset.empty()) throw EmptyBatchError("evaluate: empty dataset");
  std::vector<double> pred;
  std::vector<double> gt;
  pred.reserve(dataset.size());
  gt.reserve(dataset.size());
  std::size_t excluded = 0;
  for (const auto& sample : dataset) {
    try {
      const auto out = learner::forward(model, sample.x);
      pred.push_back(learner::estimate_hr(out.signal, band));
      gt.push_back(sample.gt_hr);
    } catch (const DegenerateSpectrumError&) {
      ++excluded;
    }
  }
  if (excluded * 10 > dataset.size())
    throw EvalIntegrityError("evaluate: more than 10% of samples had degenerate spectra");
  return compute_metrics(pred, gt, excluded);
}

TailReport tail_report(const std::vector<double>& pred_hr, const std::vector<double>& gt_hr,
                       double bin_width_bpm) {
  if (pred_hr.size() != gt_hr.size()) throw ShapeError("tail_report: size mismatch");
  if (pred_hr.size() < 10) throw EmptyBatchError("tail_report: need at least 10 pairs");
  if (!(bin_width_bpm > 0.0)) throw DomainError("tail_report: bin width must be > 0");

  TailReport report;
  report.tail_lo_edge = quantile(gt_hr, 0.10);
  report.tail_hi_edge = quantile(gt_hr, 0.90);

  const double gt_min = *std::min_element(gt_hr.begin(), gt_hr.end());
  const double gt_max = *std::max_element(gt_hr.begin(), gt_hr.end());
  const double start = std::floor(gt_min / bin_width_bpm) * bin_width_bpm;
  const auto n_bins = static_cast<std::size_t>(std::floor((gt_max - start) / bin_width_bpm)) + 1;

  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::vector<Acc> acc(n_bins);
  Acc low, high;
  for (std::size_t i = 0; i < gt_hr.size(); ++i) {
    const double err = std::abs(pred_hr[i] - gt_hr[i]);
    auto b = static_cast<std::size_t>((gt_hr[i] - start) / bin_width_bpm);
    if (b >= n_bins) b = n_bins - 1;
    acc[b].sum += err;
    acc[b].n += 1;
    if (gt_hr[i] < report.tail_lo_edge) {
      low.sum += err;
      low.n += 1;
    }
    if (gt_hr[i] > report.tail_hi_edge) {
      high.sum += err;
      high.n += 1;
    }
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    TailReport::Interval iv;
    iv.lo = start + static_cast<double>(b) * bin_width_bpm;
    iv.hi = iv.lo + bin_width_bpm;
    iv.n = acc[b].n;
    if (acc[b].n > 0) iv.mae = acc[b].sum / static_cast<double>(acc[b].n);
    report.intervals.push_back(iv);
  }
  report.low_tail = {gt_min, report.tail_lo_edge, low.n,
                     low.n > 0 ? std::optional<double>(low.sum / static_cast<double>(low.n)) : std::nullopt};
  report.high_tail = {report.tail_hi_edge, gt_max, high.n,
                      high.n > 0 ? std::optional<double>(high.sum / static_cast<double>(high.n)) : std::nullopt};
  return report;
}

SDistribution s_distribution(const std::vector<double>& values, std::size_t bins) {
  if (values.empty()) throw EmptyBatchError("s_distribution: empty sample");
  if (bins == 0) throw DomainError("s_distribution: need at least one bin");

  SDistribution d;
  d.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    d.bin_edges[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(bins);
  d.counts.assign(bins, 0);
  double sum = 0.0;
  for (double v : values) {
    const double clamped = std::clamp(v, -1.0, 1.0);
    auto b = static_cast<std::size_t>((clamped + 1.0) / 2.0 * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;  // v == 1 lands in the top bin
    d.counts[b] += 1;
    sum += v;
  }
  d.mean = sum / static_cast<double>(values.size());
  d.median = quantile(values, 0.5);
  return d;
}

}  // namespace fedhug::metrics
