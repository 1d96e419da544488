#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "fedhug/errors.hpp"
#include "fedhug/federation.hpp"
#include "fedhug/metrics.hpp"
#include "fedhug/serialize.hpp"
#include "fedhug/synth.hpp"

using namespace fedhug;
using namespace fedhug::fed;

namespace {

learner::ModelArch tiny_arch() {
  learner::ModelArch a;
  a.time_steps = 128;
  a.rows = 4;
  a.channels = 2;
  a.filters = 4;
  a.taps = 9;
  a.active_taps = 9;
  return a;
}

learner::ModelParams params_with(const learner::ModelArch& arch, double fill) {
  learner::ModelParams p{arch, std::vector<double>(arch.param_count(), fill)};
  return p;
}

synth::ClientProfile clean_profile(const std::string& id, int n = 20) {
  synth::ClientProfile p;
  p.id = id;
  p.n_samples = n;
  p.time_steps = 128;
  p.rows = 4;
  p.channels = 2;
  p.fs = 30.0;
  p.hr_dist.kind = synth::HrDistributionSpec::Kind::kUniform;
  p.hr_dist.hr_min = 60.0;
  p.hr_dist.hr_max = 90.0;
  return p;
}

// inputs whose every row carries a clean sinusoid with an integer number of
// cycles, so circular shifts are exact phase shifts
std::vector<signal::SpatioTemporalMap> clean_inputs(const learner::ModelArch& arch, int n) {
  std::vector<signal::SpatioTemporalMap> xs;
  for (int i = 0; i < n; ++i) {
    const double freq = (4.0 + i % 3) * 30.0 / arch.time_steps;  // 4..6 cycles
    signal::SpatioTemporalMap x(arch.time_steps, arch.rows, arch.channels, 30.0);
    for (int t = 0; t < arch.time_steps; ++t) {
      const auto v = static_cast<float>(std::sin(2.0 * std::numbers::pi * freq * t / 30.0));
      for (int s = 0; s < arch.rows; ++s)
        for (int c = 0; c < arch.channels; ++c) x.at(t, s, c) = v;
    }
    xs.push_back(std::move(x));
  }
  return xs;
}

ClientConfig test_client_config() {
  ClientConfig cc;
  cc.ssm_window = 45;
  cc.lr = 1e-3;
  cc.batch_size = 10;
  cc.augment = signal::AugmentPolicy{0.5, true, 0.0};
  return cc;
}

}  // namespace

TEST_CASE("aggregate_fedavg: anchors") {
  const auto arch = tiny_arch();
  const auto t1 = params_with(arch, 1.0);
  const auto t2 = params_with(arch, -1.0);
  const auto t3 = params_with(arch, 0.5);

  const auto single = aggregate_fedavg({&t1}, {120.0});
  CHECK(single.theta.theta == t1.theta);
  CHECK(single.weights == std::vector<double>{1.0});

  const auto opposed = aggregate_fedavg({&t1, &t2}, {50.0, 50.0});
  for (double v : opposed.theta.theta) CHECK(v == 0.0);

  const auto three = aggregate_fedavg({&t1, &t2, &t3}, {100.0, 200.0, 700.0});
  CHECK(three.weights[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(three.weights[1] == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(three.weights[2] == doctest::Approx(0.7).epsilon(1e-15));
  for (double v : three.theta.theta)
    CHECK(v == doctest::Approx(0.1 * 1.0 + 0.2 * (-1.0) + 0.7 * 0.5).epsilon(1e-15));

  CHECK_THROWS_AS(aggregate_fedavg({}, {}), EmptyBatchError);
}

TEST_CASE("aggregate_mba: equal scores collapse to fedavg") {
  const auto arch = tiny_arch();
  const auto t1 = params_with(arch, 0.3);
  const auto t2 = params_with(arch, -0.8);
  const auto t3 = params_with(arch, 2.0);
  const std::vector<double> sizes{100.0, 250.0, 40.0};

  const auto avg = aggregate_fedavg({&t1, &t2, &t3}, sizes);
  const auto mba = aggregate_mba({&t1, &t2, &t3}, {0.42, 0.42, 0.42}, sizes, 0.1);
  for (std::size_t i = 0; i < avg.theta.theta.size(); ++i)
    CHECK(std::abs(mba.theta.theta[i] - avg.theta.theta[i]) < 1e-12);
}

TEST_CASE("aggregate_mba: huge temperature approaches fedavg") {
  const auto arch = tiny_arch();
  const auto t1 = params_with(arch, 0.6);
  const auto t2 = params_with(arch, -0.4);
  const std::vector<double> sizes{80.0, 120.0};
  const auto avg = aggregate_fedavg({&t1, &t2}, sizes);
  const auto mba = aggregate_mba({&t1, &t2}, {0.9, -0.4}, sizes, 1e6);
  for (std::size_t i = 0; i < avg.theta.theta.size(); ++i)
    CHECK(std::abs(mba.theta.theta[i] - avg.theta.theta[i]) < 1e-6);
}

TEST_CASE("aggregate_mba: softmax arithmetic at tau = 0.1") {
  const auto arch = tiny_arch();
  const auto t1 = params_with(arch, 1.0);
  const auto t2 = params_with(arch, -1.0);
  const auto r = aggregate_mba({&t1, &t2}, {0.9, 0.5}, {100.0, 100.0}, 0.1);
  const double soft1 = 1.0 / (1.0 + std::exp(-4.0));  // exp(9)/(exp(9)+exp(5))
  CHECK(r.weights[0] == doctest::Approx(2.0 * soft1 * 0.5).epsilon(1e-12));
  CHECK(r.weights[1] == doctest::Approx(2.0 * (1.0 - soft1) * 0.5).epsilon(1e-12));
  CHECK(soft1 == doctest::Approx(0.982).epsilon(1e-3));
  for (double v : r.theta.theta)
    CHECK(v == doctest::Approx(soft1 * 1.0 + (1.0 - soft1) * (-1.0)).epsilon(1e-12));
  // equal sizes: realized weights sum to exactly 1
  CHECK(r.weights[0] + r.weights[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("aggregate_mba: renormalization flag forces the weight sum to 1") {
  const auto arch = tiny_arch();
  const auto t1 = params_with(arch, 1.0);
  const auto t2 = params_with(arch, 0.0);
  // unequal sizes: reference weights do not sum to 1
  const auto plain = aggregate_mba({&t1, &t2}, {0.8, 0.2}, {300.0, 100.0}, 0.1, false);
  double sum = plain.weights[0] + plain.weights[1];
  CHECK(sum != doctest::Approx(1.0).epsilon(1e-6));
  const auto renorm = aggregate_mba({&t1, &t2}, {0.8, 0.2}, {300.0, 100.0}, 0.1, true);
  CHECK(renorm.weights[0] + renorm.weights[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("client_round: round 0 runs with v_kl = 1 and installs the payload") {
  const auto arch = tiny_arch();
  const auto inputs = clean_inputs(arch, 20);
  ClientData client{"c", {}};
  for (const auto& x : inputs) client.train.push_back(&x);

  RngStream rng(3, "pretrain_init");
  const auto initial = learner::init_params(arch, learner::FrequencyBand{}, 30.0, rng);
  const BroadcastPayload payload{initial, std::nullopt, std::nullopt};

  auto cc = test_client_config();
  const auto result = client_round(client, payload, 0, cc, RngStream(1, "cr"));
  CHECK(result.log.v_kl_min == 1.0);
  CHECK(result.log.v_kl_max == 1.0);
  CHECK(result.report.stats.n == 20);
  CHECK(result.log.batches == 2);
  CHECK(result.report.s >= -1.0);
  CHECK(result.report.s <= 1.0);
}

TEST_CASE("client_round: lr = 0 freezes the model but still reports") {
  const auto arch = tiny_arch();
  const auto inputs = clean_inputs(arch, 10);
  ClientData client{"c", {}};
  for (const auto& x : inputs) client.train.push_back(&x);

  const auto initial = learner::identity_params(arch);
  auto cc = test_client_config();
  cc.lr = 0.0;
  const auto result = client_round(client, {initial, std::nullopt, std::nullopt}, 0, cc, RngStream(2, "cr"));
  CHECK(result.report.theta.theta == initial.theta);
  CHECK(result.report.stats.n == 10);
  CHECK(result.report.s > 0.0);
}

TEST_CASE("client_round: clean sinusoid client scores s >= 0.99 on a sane model") {
  learner::ModelArch arch = tiny_arch();
  arch.filters = 1;
  arch.taps = 1;
  arch.active_taps = 1;
  const auto inputs = clean_inputs(arch, 16);
  ClientData client{"c", {}};
  for (const auto& x : inputs) client.train.push_back(&x);

  // identity model: prediction is exactly the clean input trace
  const auto model = learner::identity_params(arch);
  auto cc = test_client_config();
  cc.lr = 0.0;
  const auto result = client_round(client, {model, std::nullopt, std::nullopt}, 0, cc, RngStream(4, "cr"));
  CHECK(result.report.s >= 0.99);
}

TEST_CASE("client_round: GDLC branch uses v_kl in (1,2) once the payload has a distribution") {
  const auto arch = tiny_arch();
  const auto inputs = clean_inputs(arch, 20);
  ClientData client{"c", {}};
  for (const auto& x : inputs) client.train.push_back(&x);

  RngStream rng(5, "init");
  const auto initial = learner::init_params(arch, learner::FrequencyBand{}, 30.0, rng);

  std::vector<double> mu(static_cast<std::size_t>(arch.feature_dim()), 0.0);
  mu[0] = 1.0;
  BroadcastPayload payload{initial, vmf::UnitVector(mu), 50.0};

  auto cc = test_client_config();
  cc.sigma = 0.0;  // center the sigmoid at zero divergence
  cc.gamma = 0.5;

  // round 1: still the warm-up branch
  auto r1 = client_round(client, payload, 1, cc, RngStream(6, "cr"));
  CHECK(r1.log.v_kl_max == 1.0);
  CHECK_FALSE(r1.log.batch_d_kl.empty());  // divergences are recorded regardless

  // round 2: weighting active
  auto r2 = client_round(client, payload, 2, cc, RngStream(6, "cr"));
  CHECK(r2.log.v_kl_min > 1.0);
  CHECK(r2.log.v_kl_max < 2.0);

  // apply_gdlc = false suppresses weighting but keeps recording
  cc.apply_gdlc = false;
  auto r3 = client_round(client, payload, 2, cc, RngStream(6, "cr"));
  CHECK(r3.log.v_kl_max == 1.0);
  CHECK_FALSE(r3.log.batch_d_kl.empty());
}

TEST_CASE("client_round: all-zero data is a client failure") {
  const auto arch = tiny_arch();
  signal::SpatioTemporalMap zero(arch.time_steps, arch.rows, arch.channels, 30.0);
  ClientData client{"dead", {&zero, &zero}};
  const auto model = learner::identity_params(arch);
  auto cc = test_client_config();
  CHECK_THROWS_AS(client_round(client, {model, std::nullopt, std::nullopt}, 0, cc, RngStream(7, "cr")),
                  ClientFailureError);
}

TEST_CASE("server_round: folds stats, aggregates, increments round") {
  const auto arch = tiny_arch();
  ServerState server{params_with(arch, 0.0), vmf::GlobalDistState{}, 0, AggregationPolicy{}};

  std::vector<double> mu(static_cast<std::size_t>(arch.feature_dim()), 0.0);
  mu[0] = 1.0;
  ClientReport r1{params_with(arch, 1.0), 0.5, vmf::BatchStats{vmf::UnitVector(mu), 0.4, 16}};
  ClientReport r2{params_with(arch, 3.0), 0.5, vmf::BatchStats{vmf::UnitVector(mu), 0.6, 16}};

  ServerRoundLog log;
  const auto next = server_round(server, {&r1, &r2}, &log);
  CHECK(next.round == 1);
  CHECK(next.dist.n_total() == 32);
  CHECK(next.dist.r_bar() == doctest::Approx(0.5).epsilon(1e-12));
  // equal s, equal sizes: fedavg-equivalent mixing
  for (double v : next.theta.theta) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(log.weights.size() == 2);

  // an excluded client renormalizes the weights over participants
  const auto solo = server_round(server, {nullptr, &r2}, &log);
  for (double v : solo.theta.theta) CHECK(v == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(log.weights == std::vector<double>{1.0});

  CHECK_THROWS_AS(server_round(server, {nullptr, nullptr}, nullptr), EmptyBatchError);
}

TEST_CASE("server_round: repeated identical folds are deterministic") {
  const auto arch = tiny_arch();
  ServerState server{params_with(arch, 0.0), vmf::GlobalDistState{}, 3, AggregationPolicy{}};
  std::vector<double> mu(static_cast<std::size_t>(arch.feature_dim()), 0.0);
  mu[1] = 1.0;
  ClientReport r{params_with(arch, -0.5), 0.1, vmf::BatchStats{vmf::UnitVector(mu), 0.3, 8}};
  const auto a = server_round(server, {&r}, nullptr);
  const auto b = server_round(server, {&r}, nullptr);
  CHECK(a.theta.theta == b.theta.theta);
  CHECK(a.dist.r_bar() == b.dist.r_bar());
  CHECK(a.round == 4);
}

TEST_CASE("make_broadcast carries the distribution only once initialized") {
  const auto arch = tiny_arch();
  ServerState server{params_with(arch, 0.0), vmf::GlobalDistState{}, 0, AggregationPolicy{}};
  CHECK_FALSE(make_broadcast(server).mu.has_value());

  std::vector<double> mu(static_cast<std::size_t>(arch.feature_dim()), 0.0);
  mu[0] = 1.0;
  server.dist = vmf::update_global(server.dist, vmf::BatchStats{vmf::UnitVector(mu), 0.5, 10});
  const auto payload = make_broadcast(server);
  REQUIRE(payload.mu.has_value());
  CHECK(*payload.kappa == doctest::Approx(server.dist.kappa()));
}

TEST_CASE("wire formats cannot carry samples or labels (payload audit)") {
  const auto arch = tiny_arch();
  std::vector<double> mu(static_cast<std::size_t>(arch.feature_dim()), 0.0);
  mu[0] = 1.0;
  const ClientReport report{params_with(arch, 0.25), 0.7,
                            vmf::BatchStats{vmf::UnitVector(mu), 0.4, 12}};
  const auto rj = io::client_report_to_json(report);
  std::set<std::string> report_keys;
  for (const auto& [k, v] : rj.items()) report_keys.insert(k);
  CHECK(report_keys == std::set<std::string>{"theta", "s", "stats"});
  std::set<std::string> stats_keys;
  for (const auto& [k, v] : rj.at("stats").items()) stats_keys.insert(k);
  CHECK(stats_keys == std::set<std::string>{"mu", "r_bar", "n"});

  const BroadcastPayload payload{params_with(arch, 0.0), vmf::UnitVector(mu), 3.0};
  const auto pj = io::broadcast_to_json(payload);
  std::set<std::string> payload_keys;
  for (const auto& [k, v] : pj.items()) payload_keys.insert(k);
  CHECK(payload_keys == std::set<std::string>{"theta", "mu", "kappa"});
}

TEST_CASE("run_rounds: zero rounds returns the initial model") {
  const auto arch = tiny_arch();
  const auto inputs = clean_inputs(arch, 10);
  std::vector<ClientData> clients(2);
  clients[0].id = "a";
  clients[1].id = "b";
  for (const auto& x : inputs) {
    clients[0].train.push_back(&x);
    clients[1].train.push_back(&x);
  }
  RunOptions opts;
  opts.rounds = 0;
  opts.client = test_client_config();
  const auto initial = learner::identity_params(arch);
  const auto result = run_rounds(initial, vmf::GlobalDistState{}, clients, opts);
  CHECK(result.history.empty());
  CHECK(result.server.theta.theta == initial.theta);
}

TEST_CASE("run_rounds: deterministic across thread counts, rounds monotone") {
  const auto arch = tiny_arch();
  const auto inputs_a = clean_inputs(arch, 12);
  const auto inputs_b = clean_inputs(arch, 16);
  std::vector<ClientData> clients(2);
  clients[0].id = "a";
  clients[1].id = "b";
  for (const auto& x : inputs_a) clients[0].train.push_back(&x);
  for (const auto& x : inputs_b) clients[1].train.push_back(&x);

  RngStream rng(8, "init");
  const auto initial = learner::init_params(arch, learner::FrequencyBand{}, 30.0, rng);

  RunOptions opts;
  opts.rounds = 4;
  opts.seed = 42;
  opts.client = test_client_config();
  opts.gdlc.calibration = GdlcOptions::Calibration::kFixed;
  opts.gdlc.sigma = 1.0;

  opts.threads = 1;
  const auto serial = run_rounds(initial, vmf::GlobalDistState{}, clients, opts);
  opts.threads = 4;
  const auto parallel = run_rounds(initial, vmf::GlobalDistState{}, clients, opts);

  REQUIRE(serial.history.size() == 4);
  CHECK(serial.server.theta.theta == parallel.server.theta.theta);
  std::uint64_t prev_n = 0;
  for (std::size_t r = 0; r < serial.history.size(); ++r) {
    CHECK(serial.history[r].round == static_cast<int>(r));
    CHECK(serial.history[r].dist_n >= prev_n);
    prev_n = serial.history[r].dist_n;
    CHECK(io::round_record_to_json(serial.history[r]).dump() ==
          io::round_record_to_json(parallel.history[r]).dump());
  }
  CHECK(serial.server.round == 4);
}

TEST_CASE("evaluate: near-perfect model on clean data") {
  learner::ModelArch arch = tiny_arch();
  arch.filters = 1;
  arch.taps = 1;
  arch.active_taps = 1;

  auto profile = clean_profile("eval");
  const auto bench_cfg = [&] {
    synth::BenchmarkConfig c;
    c.pretrain = profile;
    c.pretrain.id = "pre";
    c.clients = {profile, clean_profile("other")};
    c.target = profile;
    c.target.id = "tgt";
    return c;
  }();
  const auto bench = synth::gen_benchmark(bench_cfg, 5);

  const auto model = learner::identity_params(arch);
  const auto result = metrics::evaluate(model, bench.target, learner::FrequencyBand{});
  CHECK(result.mae < 0.5);
  CHECK(result.excluded == 0);
  CHECK(result.pearson > 0.99);
}
