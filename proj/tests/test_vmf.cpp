#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fedhug/errors.hpp"
#include "fedhug/vmf.hpp"
#include "oracles.hpp"

using namespace fedhug;
using namespace fedhug::vmf;

namespace {

UnitVector basis(int d, int axis = 0) {
  std::vector<double> v(static_cast<std::size_t>(d), 0.0);
  v[static_cast<std::size_t>(axis)] = 1.0;
  return UnitVector(std::move(v));
}

UnitVector tilted(int d, double angle) {
  std::vector<double> v(static_cast<std::size_t>(d), 0.0);
  v[0] = std::cos(angle);
  v[1] = std::sin(angle);
  return UnitVector(std::move(v));
}

}  // namespace

TEST_CASE("estimate_batch_stats: fully concentrated batch") {
  const auto e = basis(8);
  std::vector<UnitVector> batch(17, e);
  const auto stats = estimate_batch_stats(batch);
  CHECK(stats.n == 17);
  CHECK(stats.r_bar == doctest::Approx(kRbarCeiling));  // clamped from 1
  CHECK(stats.mu.dot(e) == doctest::Approx(1.0));
}

TEST_CASE("estimate_batch_stats: balanced antipodal batch is degenerate") {
  std::vector<UnitVector> batch{basis(4), UnitVector({-1.0, 0.0, 0.0, 0.0})};
  CHECK_THROWS_AS(estimate_batch_stats(batch), DegenerateResultantError);
  CHECK_THROWS_AS(estimate_batch_stats({}), EmptyBatchError);
}

TEST_CASE("estimate_batch_stats: vMF sample recovers direction and resultant") {
  const int d = 8;
  const double kappa = 10.0;
  RngStream rng(11, "vmf_mle");
  const auto mu_star = tilted(d, 0.9);
  const auto sample = sample_vmf(VmfParams{mu_star, kappa}, 10000, rng);
  const auto stats = estimate_batch_stats(sample);
  CHECK(std::acos(std::min(1.0, stats.mu.dot(mu_star))) < 0.05);
  CHECK(std::abs(stats.r_bar - static_cast<double>(oracles::series_a_d(kappa, d))) < 0.02);
}

TEST_CASE("estimate_batch_stats: order invariance") {
  RngStream rng(12, "order");
  std::vector<UnitVector> batch = sample_vmf(VmfParams{basis(6), 3.0}, 64, rng);
  auto reversed = batch;
  std::reverse(reversed.begin(), reversed.end());
  const auto a = estimate_batch_stats(batch);
  const auto b = estimate_batch_stats(reversed);
  CHECK(a.r_bar == doctest::Approx(b.r_bar).epsilon(1e-12));
  CHECK(a.mu.dot(b.mu) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kappa_from_rbar: anchors and errors") {
  CHECK(kappa_from_rbar(0.0, 5) == 0.0);
  // R(d - R^2)/(1 - R^2) at d = 4, R = 0.5
  CHECK(kappa_from_rbar(0.5, 4) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(kappa_from_rbar(-0.1, 4), DomainError);
  // values above the ceiling clamp instead of hitting the pole
  CHECK(std::isfinite(kappa_from_rbar(1.0, 4)));
}

TEST_CASE("kappa_from_rbar: bisection cross-check at d = 4") {
  // A_4(kappa) = 0.5 should hold within 5% of the approximate kappa = 2.5
  const double kappa_exact = oracles::bisect_kappa(0.5, 4);
  CHECK(std::abs(2.5 - kappa_exact) / kappa_exact < 0.05);
}

TEST_CASE("kappa_from_rbar: <5% relative error in resultant across d") {
  for (const int d : {4, 8, 16, 64}) {
    for (int i = 1; i <= 9; ++i) {
      const double r = 0.1 * i;
      const double kappa = kappa_from_rbar(r, d);
      const double a = static_cast<double>(oracles::series_a_d(kappa, d));
      CHECK(std::abs(a - r) / r < 0.05);
    }
  }
}

TEST_CASE("kappa_from_rbar: monotone in r_bar") {
  for (const int d : {2, 3, 16}) {
    double prev = -1.0;
    for (int i = 0; i <= 50; ++i) {
      const double k = kappa_from_rbar(0.999 * i / 50.0, d);
      CHECK(k > prev);
      prev = k;
    }
  }
}

TEST_CASE("bessel_ratio_a_d: zero, closed form, asymptotics") {
  CHECK(bessel_ratio_a_d(0.0, 7) == 0.0);
  // d = 3: A_3(kappa) = coth(kappa) - 1/kappa
  for (const double kappa : {0.25, 1.0, 3.0, 20.0, 150.0}) {
    const double expected = 1.0 / std::tanh(kappa) - 1.0 / kappa;
    CHECK(bessel_ratio_a_d(kappa, 3) == doctest::Approx(expected).epsilon(1e-10));
  }
  // large argument: A_d ~ 1 - (d-1)/(2 kappa)
  const double big = bessel_ratio_a_d(1e4, 8);
  CHECK(std::abs(big - (1.0 - 7.0 / (2.0 * 1e4))) < 1e-6);
}

TEST_CASE("bessel_ratio_a_d: matches series oracle to 1e-8 everywhere") {
  for (const int d : {2, 3, 4, 8, 16, 64}) {
    for (const double kappa : {1e-3, 0.1, 1.0, 10.0, 63.0, 65.0, 200.0, 500.0}) {
      const double mine = bessel_ratio_a_d(kappa, d);
      const double ref = static_cast<double>(oracles::series_a_d(kappa, d));
      CHECK(std::abs(mine - ref) / ref < 1e-8);
    }
  }
}

TEST_CASE("bessel_ratio_a_d: monotone increasing in kappa, bounded by 1") {
  for (const int d : {2, 8, 64}) {
    double prev = -1.0;
    for (double kappa = 0.0; kappa < 9000.0; kappa += 37.0) {
      const double a = bessel_ratio_a_d(kappa, d);
      CHECK(a > prev);
      CHECK(a < 1.0);
      prev = a;
    }
  }
}

TEST_CASE("log_c_d: d = 3 closed forms") {
  // kappa -> 0: uniform density on S^2 = 1/(4 pi)
  CHECK(log_c_d(0.0, 3) == doctest::Approx(-std::log(4.0 * std::numbers::pi)).epsilon(1e-12));
  CHECK(log_c_d(1e-9, 3) == doctest::Approx(-std::log(4.0 * std::numbers::pi)).epsilon(1e-7));
  // C_3(kappa) = kappa / (4 pi sinh kappa)
  for (const double kappa : {0.5, 2.0, 10.0, 300.0}) {
    const double expected = std::log(kappa) - std::log(4.0 * std::numbers::pi) -
                            (kappa + std::log1p(-std::exp(-2.0 * kappa)) - std::numbers::ln2);
    CHECK(log_c_d(kappa, 3) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("log_c_d: finite and continuous out to kappa = 1e6") {
  for (const int d : {2, 8, 16, 64}) {
    double prev = log_c_d(0.0, d);
    for (const double kappa : {1e-7, 1e-3, 1.0, 100.0, 1e4, 1e6}) {
      const double v = log_c_d(kappa, d);
      REQUIRE(std::isfinite(v));
      CHECK(v <= prev + 1e-9);  // normalizer decreases in kappa
      prev = v;
    }
  }
}

TEST_CASE("update_global: first installation") {
  GlobalDistState state;
  CHECK_FALSE(state.initialized());
  const BatchStats batch{basis(5), 0.5, 100};
  const auto next = update_global(state, batch);
  CHECK(next.initialized());
  CHECK(next.n_total() == 100);
  CHECK(next.r_bar() == doctest::Approx(0.5));
  CHECK(next.mu().dot(batch.mu) == doctest::Approx(1.0));
  CHECK(next.kappa() == doctest::Approx(kappa_from_rbar(0.5, 5)));
}

TEST_CASE("update_global: equal stats are a fixed point") {
  const BatchStats batch{tilted(5, 0.4), 0.37, 250};
  auto state = update_global(GlobalDistState{}, batch);
  state = update_global(state, batch);
  CHECK(state.n_total() == 500);
  CHECK(state.r_bar() == doctest::Approx(0.37).epsilon(1e-12));
  CHECK(state.mu().dot(batch.mu) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("update_global: sequential fusion equals pooled estimate") {
  const int d = 6;
  RngStream rng(21, "fusion");
  std::vector<BatchStats> batches;
  for (int b = 0; b < 10; ++b) {
    std::vector<double> dir(d);
    for (auto& x : dir) x = rng.normal();
    batches.push_back(BatchStats{UnitVector::normalized(dir), rng.uniform(0.05, 0.95),
                                 static_cast<std::uint64_t>(rng.uniform_int(5, 400))});
  }

  GlobalDistState state;
  for (const auto& b : batches) state = update_global(state, b);

  // pooled oracle, same left-to-right order
  double r_sum = 0.0;
  std::uint64_t n_sum = 0;
  std::vector<double> mu_sum(d, 0.0);
  for (const auto& b : batches) {
    r_sum += b.r_bar * static_cast<double>(b.n);
    n_sum += b.n;
    for (int i = 0; i < d; ++i) mu_sum[static_cast<std::size_t>(i)] += static_cast<double>(b.n) * b.mu.components()[static_cast<std::size_t>(i)];
  }
  const double pooled_r = r_sum / static_cast<double>(n_sum);
  CHECK(state.r_bar() == pooled_r);  // bit-exact
  CHECK(state.n_total() == n_sum);
  const auto pooled_mu = UnitVector::normalized(mu_sum);
  CHECK(std::acos(std::min(1.0, state.mu().dot(pooled_mu))) < 1e-6);
}

TEST_CASE("update_global: opposed fusion is degenerate; n never decreases") {
  auto state = update_global(GlobalDistState{}, BatchStats{basis(4), 0.5, 50});
  const BatchStats opposite{UnitVector({-1.0, 0.0, 0.0, 0.0}), 0.5, 50};
  CHECK_THROWS_AS(update_global(state, opposite), DegenerateFusionError);
  const auto grown = update_global(state, BatchStats{basis(4, 1), 0.2, 10});
  CHECK(grown.n_total() > state.n_total());
}

TEST_CASE("kl_divergence: zero at identical params, shape checked") {
  const VmfParams p{tilted(8, 0.3), 7.5};
  CHECK(kl_divergence(p, p) == doctest::Approx(0.0).epsilon(1e-9));
  const VmfParams q{basis(4), 1.0};
  CHECK_THROWS_AS(kl_divergence(p, q), ShapeError);
}

TEST_CASE("kl_divergence: orthogonal means with equal concentration") {
  const int d = 8;
  const double kappa = 4.0;
  const VmfParams p{basis(d, 0), kappa};
  const VmfParams q{basis(d, 1), kappa};
  // log-normalizers cancel; KL = kappa * A_d(kappa)
  CHECK(kl_divergence(p, q) ==
        doctest::Approx(kappa * bessel_ratio_a_d(kappa, d)).epsilon(1e-12));
}

TEST_CASE("kl_divergence: nonnegative on random pairs") {
  RngStream rng(31, "klpairs");
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(8), b(8);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    const VmfParams p{UnitVector::normalized(a), rng.uniform(0.0, 40.0)};
    const VmfParams q{UnitVector::normalized(b), rng.uniform(0.0, 40.0)};
    CHECK(kl_divergence(p, q) >= -1e-9);
  }
}

TEST_CASE("kl_divergence: agrees with Monte-Carlo oracle (moderate grid)") {
  RngStream rng(32, "klmc");
  const int d = 8;
  for (const double ki : {2.0, 8.0}) {
    for (const double kt : {2.0, 8.0}) {
      for (const double angle : {0.0, std::numbers::pi / 2}) {
        const VmfParams p{basis(d), ki};
        const VmfParams q{tilted(d, angle), kt};
        const double exact = kl_divergence(p, q);
        const double mc = oracles::mc_kl(p, q, 200000, rng);
        CHECK(std::abs(exact - mc) < std::max(0.02, 0.02 * exact));
      }
    }
  }
}

TEST_CASE("vkl_weight: midpoint, saturation, direct value") {
  CHECK(vkl_weight(50.0, 50.0, 0.5) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(vkl_weight(0.0, 50.0, 0.5) == doctest::Approx(1.0).epsilon(1e-9));
  // 1 + logistic(2)
  CHECK(vkl_weight(51.0, 50.0, 0.5) ==
        doctest::Approx(1.0 + 1.0 / (1.0 + std::exp(-2.0))).epsilon(1e-12));
  CHECK_THROWS_AS(vkl_weight(1.0, 0.0, 0.0), DomainError);
}

TEST_CASE("vkl_weight: image strictly inside (1,2), printed form unbounded") {
  for (const double dkl : {0.0, 1.0, 49.0, 50.0, 51.0, 1e4, 1e8}) {
    const double v = vkl_weight(dkl, 50.0, 0.5);
    CHECK(v > 1.0);
    CHECK(v < 2.0);
  }
  CHECK(vkl_weight(60.0, 50.0, 0.5, VklForm::kPrinted) > 2.0);
}

TEST_CASE("sample_vmf: uniform sphere at kappa = 0") {
  RngStream rng(41, "uniform_sphere");
  const auto samples = sample_vmf(VmfParams{basis(3), 0.0}, 100000, rng);
  std::vector<double> sum(3, 0.0);
  for (const auto& v : samples) {
    for (int i = 0; i < 3; ++i) sum[static_cast<std::size_t>(i)] += v.components()[static_cast<std::size_t>(i)];
  }
  double norm = 0.0;
  for (double x : sum) norm += x * x;
  CHECK(std::sqrt(norm) / 100000.0 < 0.02);
}

TEST_CASE("sample_vmf: concentration limit") {
  RngStream rng(42, "concentrated");
  const auto mu = tilted(5, 1.1);
  for (const auto& v : sample_vmf(VmfParams{mu, 1e6}, 200, rng)) {
    CHECK(std::acos(std::min(1.0, v.dot(mu))) < 0.01);
  }
}

TEST_CASE("sample_vmf: empirical resultant matches A_d") {
  RngStream rng(43, "resultant");
  const int d = 8;
  const double kappa = 5.0;
  const auto samples = sample_vmf(VmfParams{tilted(d, 0.7), kappa}, 100000, rng);
  const auto stats = estimate_batch_stats(samples);
  CHECK(std::abs(stats.r_bar - bessel_ratio_a_d(kappa, d)) < 0.01);
}

TEST_CASE("sample_vmf: works at d = 2") {
  RngStream rng(44, "circle");
  const auto samples = sample_vmf(VmfParams{basis(2), 3.0}, 5000, rng);
  const auto stats = estimate_batch_stats(samples);
  CHECK(std::abs(stats.r_bar - bessel_ratio_a_d(3.0, 2)) < 0.03);
}

TEST_CASE("UnitVector validation") {
  CHECK_THROWS_AS(UnitVector({0.5, 0.5}), DomainError);
  CHECK_THROWS_AS(UnitVector(std::vector<double>{1.0}), ShapeError);
  CHECK_THROWS_AS(UnitVector::normalized({0.0, 0.0, 0.0}), DegenerateResultantError);
  const auto v = UnitVector::normalized({3.0, 4.0});
  CHECK(v.components()[0] == doctest::Approx(0.6));
}
