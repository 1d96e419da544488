#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fedhug/config.hpp"
#include "fedhug/errors.hpp"
#include "fedhug/learner.hpp"
#include "fedhug/metrics.hpp"
#include "fedhug/synth.hpp"

using namespace fedhug;
using namespace fedhug::synth;

namespace {

ClientProfile tiny_profile(const std::string& id) {
  ClientProfile p;
  p.id = id;
  p.n_samples = 20;
  p.time_steps = 128;
  p.rows = 4;
  p.channels = 2;
  p.fs = 30.0;
  p.hr_dist.kind = HrDistributionSpec::Kind::kUniform;
  p.hr_dist.hr_min = 55.0;
  p.hr_dist.hr_max = 95.0;
  return p;
}

}  // namespace

TEST_CASE("sample_hr: degenerate uniform support") {
  HrDistributionSpec spec;
  spec.kind = HrDistributionSpec::Kind::kUniform;
  spec.hr_min = 60.0;
  spec.hr_max = 60.0;
  RngStream rng(1, "hr_uniform");
  for (int i = 0; i < 50; ++i) CHECK(sample_hr(spec, rng) == 60.0);
}

TEST_CASE("sample_hr: lognormal right tail dominates the left") {
  HrDistributionSpec spec;  // defaults: lognormal, median 72
  spec.log_sigma = 0.3;
  RngStream rng(2, "hr_tail");
  std::vector<double> draws(100000);
  for (auto& d : draws) d = sample_hr(spec, rng);
  for (double d : draws) {
    REQUIRE(d >= spec.hr_min);
    REQUIRE(d <= spec.hr_max);
  }
  const double p01 = metrics::quantile(draws, 0.01);
  const double p50 = metrics::quantile(draws, 0.50);
  const double p99 = metrics::quantile(draws, 0.99);
  CHECK(p99 - p50 > 2.0 * (p50 - p01));
}

TEST_CASE("sample_hr: mixture respects component weights") {
  HrDistributionSpec spec;
  spec.kind = HrDistributionSpec::Kind::kGaussianMixture;
  spec.components = {{70.0, 1.0, 0.7}, {140.0, 1.0, 0.3}};
  RngStream rng(3, "hr_mix");
  int low = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    if (sample_hr(spec, rng) < 105.0) ++low;
  }
  CHECK(std::abs(static_cast<double>(low) / n - 0.7) < 0.01);
}

TEST_CASE("gen_sample: zero bias replicates the ground truth in every row") {
  auto profile = tiny_profile("z");
  RngStream rng(4, "gen_zero");
  const auto sample = gen_sample(72.0, profile, rng);
  CHECK(sample.gt_hr == 72.0);
  for (int t = 0; t < profile.time_steps; ++t) {
    for (int s = 0; s < profile.rows; ++s) {
      for (int c = 0; c < profile.channels; ++c) {
        CHECK(static_cast<double>(sample.x.at(t, s, c)) ==
              doctest::Approx(sample.gt_signal.samples[static_cast<std::size_t>(t)]).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("gen_sample: ground-truth dominant frequency matches the requested HR") {
  auto profile = tiny_profile("f");
  profile.bias.harmonic_ratio = 0.4;
  RngStream rng(5, "gen_hr");
  const learner::FrequencyBand band{};
  for (const double hr : {48.0, 72.0, 111.0, 160.0}) {
    const auto sample = gen_sample(hr, profile, rng);
    const double est = learner::estimate_hr(sample.gt_signal, band);
    // one interpolated bin at this resolution
    CHECK(std::abs(est - hr) < 60.0 * profile.fs / 512.0);
  }
}

TEST_CASE("gen_sample: heavy noise breaks single-row HR recovery") {
  auto profile = tiny_profile("n");
  profile.bias.noise_sigma = 10.0;
  RngStream rng(6, "gen_noise");
  const learner::FrequencyBand band{};
  int failures = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    const auto sample = gen_sample(75.0, profile, rng);
    std::vector<double> row(static_cast<std::size_t>(profile.time_steps));
    for (int t = 0; t < profile.time_steps; ++t) row[static_cast<std::size_t>(t)] = sample.x.at(t, 0, 0);
    const double est = learner::estimate_hr(signal::Waveform(std::move(row), profile.fs), band);
    if (std::abs(est - 75.0) > 5.0) ++failures;
  }
  CHECK(failures > trials * 3 / 10);
}

TEST_CASE("gen_benchmark: 4:1 split and structure") {
  BenchmarkConfig config;
  config.pretrain = tiny_profile("pre");
  config.clients = {tiny_profile("a"), tiny_profile("b")};
  config.target = tiny_profile("t");
  const auto bench = gen_benchmark(config, 99);

  CHECK(bench.pretrain.size() == 20);
  CHECK(bench.target.size() == 20);
  REQUIRE(bench.clients.size() == 2);
  for (const auto& c : bench.clients) {
    CHECK(c.train.size() == 16);
    CHECK(c.val.size() == 4);
  }
}

TEST_CASE("gen_benchmark: deterministic and client-stream independent") {
  BenchmarkConfig config;
  config.pretrain = tiny_profile("pre");
  config.clients = {tiny_profile("a"), tiny_profile("b")};
  config.target = tiny_profile("t");

  const auto b1 = gen_benchmark(config, 7);
  const auto b2 = gen_benchmark(config, 7);
  REQUIRE(b1.clients[0].train.size() == b2.clients[0].train.size());
  for (std::size_t i = 0; i < b1.clients[0].train.size(); ++i) {
    CHECK(b1.clients[0].train[i].gt_hr == b2.clients[0].train[i].gt_hr);
    CHECK(b1.clients[0].train[i].x.values() == b2.clients[0].train[i].x.values());
  }

  // adding a client leaves existing clients' data untouched
  auto config3 = config;
  config3.clients.push_back(tiny_profile("c"));
  const auto b3 = gen_benchmark(config3, 7);
  for (std::size_t i = 0; i < b1.clients[0].train.size(); ++i) {
    CHECK(b3.clients[0].train[i].gt_hr == b1.clients[0].train[i].gt_hr);
    CHECK(b3.clients[0].train[i].x.values() == b1.clients[0].train[i].x.values());
  }
  CHECK(b3.clients[1].train[0].gt_hr == b1.clients[1].train[0].gt_hr);
}

TEST_CASE("gen_benchmark: duplicate ids and invalid profiles are config errors") {
  BenchmarkConfig config;
  config.pretrain = tiny_profile("pre");
  config.clients = {tiny_profile("a"), tiny_profile("a")};
  config.target = tiny_profile("t");
  CHECK_THROWS_AS(gen_benchmark(config, 1), ConfigError);

  config.clients = {tiny_profile("a")};
  CHECK_THROWS_AS(gen_benchmark(config, 1), ConfigError);

  config.clients = {tiny_profile("a"), tiny_profile("b")};
  config.clients[0].n_samples = 5;
  CHECK_THROWS_AS(gen_benchmark(config, 1), ConfigError);

  config.clients[0].n_samples = 20;
  config.clients[0].hr_dist.hr_max = 300.0;
  CHECK_THROWS_AS(gen_benchmark(config, 1), ConfigError);
}

TEST_CASE("gen_benchmark: pooled client HR histogram is long-tailed") {
  BenchmarkConfig config;
  config.pretrain = tiny_profile("pre");
  auto a = tiny_profile("a");
  auto b = tiny_profile("b");
  for (auto* p : {&a, &b}) {
    p->n_samples = 5000;
    p->hr_dist.kind = HrDistributionSpec::Kind::kTruncatedLognormal;
    p->hr_dist.median_bpm = 72.0;
    p->hr_dist.log_sigma = 0.22;
    p->hr_dist.hr_min = 45.0;
    p->hr_dist.hr_max = 175.0;
  }
  config.clients = {a, b};
  config.target = tiny_profile("t");
  const auto bench = gen_benchmark(config, 13);

  std::vector<double> hrs;
  for (const auto& c : bench.clients) {
    for (const auto& s : c.train) hrs.push_back(s.gt_hr);
    for (const auto& s : c.val) hrs.push_back(s.gt_hr);
  }
  REQUIRE(hrs.size() == 10000);
  const double p50 = metrics::quantile(hrs, 0.5);
  // long tail: right spread well above left spread, median near the spec
  CHECK(std::abs(p50 - 72.0) < 2.0);
  CHECK(metrics::quantile(hrs, 0.99) - p50 > 1.8 * (p50 - metrics::quantile(hrs, 0.01)));
}

TEST_CASE("mmwave preset profiles generate radar-shaped tensors") {
  const auto preset = cfg::preset_config("mmwave-3");
  const auto config = cfg::parse_config(preset);
  auto small = config.benchmark;
  small.pretrain.n_samples = 10;
  for (auto& c : small.clients) c.n_samples = 10;
  small.target.n_samples = 10;
  const auto bench = gen_benchmark(small, 3);
  CHECK(bench.pretrain[0].x.rows() == 2);
  CHECK(bench.pretrain[0].x.channels() == 5);
  CHECK(bench.pretrain[0].x.time_steps() == 256);
}
