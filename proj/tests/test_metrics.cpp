#include <doctest.h>

#include <cmath>

#include "fedhug/errors.hpp"
#include "fedhug/metrics.hpp"
#include "fedhug/rng.hpp"

using namespace fedhug;
using namespace fedhug::metrics;

TEST_CASE("compute_metrics: perfect predictor") {
  const std::vector<double> gt{60.0, 72.0, 85.0, 110.0};
  const auto r = compute_metrics(gt, gt);
  CHECK(r.mae == 0.0);
  CHECK(r.rmse == 0.0);
  CHECK(r.sd == 0.0);
  CHECK(r.pearson == doctest::Approx(1.0));
  CHECK_FALSE(r.pearson_degenerate);
  CHECK(r.n == 4);
}

TEST_CASE("compute_metrics: constant prediction flags pearson") {
  const std::vector<double> pred{80.0, 80.0, 80.0};
  const std::vector<double> gt{60.0, 80.0, 100.0};
  const auto r = compute_metrics(pred, gt);
  CHECK(r.pearson == 0.0);
  CHECK(r.pearson_degenerate);
}

TEST_CASE("compute_metrics: hand-computed errors {+1, -1, +3}") {
  const std::vector<double> gt{70.0, 80.0, 90.0};
  const std::vector<double> pred{71.0, 79.0, 93.0};
  const auto r = compute_metrics(pred, gt);
  CHECK(r.mae == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
  CHECK(r.rmse == doctest::Approx(std::sqrt(11.0 / 3.0)).epsilon(1e-12));
  // population std of the absolute errors {1, 1, 3}
  const double mean_abs = 5.0 / 3.0;
  const double var = ((1 - mean_abs) * (1 - mean_abs) * 2 + (3 - mean_abs) * (3 - mean_abs)) / 3.0;
  CHECK(r.sd == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
  CHECK(r.rmse >= r.mae);
}

TEST_CASE("compute_metrics: rmse >= mae and order invariance on random data") {
  RngStream rng(1, "metrics_prop");
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(rng.uniform_int(0, 50));
    std::vector<double> pred(n), gt(n);
    for (std::size_t i = 0; i < n; ++i) {
      gt[i] = rng.uniform(50.0, 160.0);
      pred[i] = gt[i] + 8.0 * rng.normal();
    }
    const auto r = compute_metrics(pred, gt);
    CHECK(r.rmse >= r.mae - 1e-12);

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<double> pred2(n), gt2(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred2[i] = pred[perm[i]];
      gt2[i] = gt[perm[i]];
    }
    const auto r2 = compute_metrics(pred2, gt2);
    CHECK(r2.mae == doctest::Approx(r.mae).epsilon(1e-12));
    CHECK(r2.rmse == doctest::Approx(r.rmse).epsilon(1e-12));
    CHECK(r2.pearson == doctest::Approx(r.pearson).epsilon(1e-9));
  }
}

TEST_CASE("tail_report: single-bin data reproduces the global MAE") {
  std::vector<double> gt(20, 0.0), pred(20, 0.0);
  RngStream rng(2, "tail_single");
  double abs_sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    gt[i] = 71.0 + rng.uniform(0.0, 8.0);  // all inside one 10-bpm bin
    pred[i] = gt[i] + rng.normal();
    abs_sum += std::abs(pred[i] - gt[i]);
  }
  const auto report = tail_report(pred, gt);
  std::size_t occupied = 0;
  for (const auto& iv : report.intervals) {
    if (iv.n > 0) {
      ++occupied;
      CHECK(*iv.mae == doctest::Approx(abs_sum / 20.0).epsilon(1e-12));
    } else {
      CHECK_FALSE(iv.mae.has_value());  // empty bins are absent, not zero
    }
  }
  CHECK(occupied == 1);
}

TEST_CASE("tail_report: uniform ground truth puts ~10% in each tail") {
  RngStream rng(3, "tail_uniform");
  const std::size_t n = 10000;
  std::vector<double> gt(n), pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    gt[i] = rng.uniform(50.0, 150.0);
    pred[i] = gt[i] + rng.normal();
  }
  const auto report = tail_report(pred, gt);
  CHECK(std::abs(static_cast<double>(report.low_tail.n) / n - 0.10) < 0.01);
  CHECK(std::abs(static_cast<double>(report.high_tail.n) / n - 0.10) < 0.01);
  CHECK(report.tail_lo_edge < report.tail_hi_edge);
  CHECK_THROWS_AS(tail_report({1.0}, {1.0}), EmptyBatchError);
}

TEST_CASE("tail_report: long-tail ground truth keeps tail bins occupied") {
  RngStream rng(4, "tail_long");
  const std::size_t n = 5000;
  std::vector<double> gt(n), pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    gt[i] = std::min(175.0, std::max(45.0, 72.0 * std::exp(0.25 * rng.normal())));
    pred[i] = gt[i] + 2.0 * rng.normal();
  }
  const auto report = tail_report(pred, gt);
  CHECK(report.low_tail.n > 0);
  CHECK(report.high_tail.n > 0);
  CHECK(report.low_tail.mae.has_value());
  CHECK(report.high_tail.mae.has_value());
}

TEST_CASE("s_distribution: all ones occupy only the top bin") {
  const auto d = s_distribution(std::vector<double>(25, 1.0), 40);
  CHECK(d.counts.back() == 25);
  for (std::size_t b = 0; b + 1 < d.counts.size(); ++b) CHECK(d.counts[b] == 0);
  CHECK(d.mean == doctest::Approx(1.0));
  CHECK(d.median == doctest::Approx(1.0));
}

TEST_CASE("s_distribution: uniform scores fill bins evenly") {
  RngStream rng(5, "s_uniform");
  std::vector<double> values(40000);
  for (auto& v : values) v = rng.uniform(-1.0, 1.0);
  const auto d = s_distribution(values, 40);
  for (const auto c : d.counts) CHECK(std::abs(static_cast<double>(c) - 1000.0) < 150.0);
  CHECK(std::abs(d.mean) < 0.02);
}

TEST_CASE("quantile: linear interpolation") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK(quantile(v, 0.5) == doctest::Approx(2.5));
  CHECK_THROWS_AS(quantile({}, 0.5), EmptyBatchError);
}
