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
#include "fedhug/federation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <thread>

#include "fedhug/errors.hpp"

namespace fedhug::fed {

namespace {

// Local linear-interpolated quantile; this module deliberately does not
// link against the evaluation layer.
double quantile_of(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

void AggregationPolicy::validate() const {
  if (kind == Kind::kMba && !(tau > 0.0)) throw ConfigError("AggregationPolicy: tau must be > 0");
}

std::vector<double> consistency_scores(const learner::ModelParams& theta,
                                       const std::vector<const signal::SpatioTemporalMap*>& inputs,
                                       const signal::AugmentPolicy& policy, std::size_t ssm_window,
                                       RngStream& rng, std::size_t* skipped) {
  policy.validate();
  std::vector<double> scores;
  scores.reserve(inputs.size());
  std::size_t skip_count = 0;
  for (const auto* x : inputs) {
    const auto params = signal::draw_augment_params(policy, x->fs(), x->rows(), rng);
    const auto x_aug = signal::apply_augment(*x, params, rng);
    try {
      const auto pred = learner::forward(theta, *x);
      const auto pred_aug = learner::forward(theta, x_aug);
      const auto m = signal::compute_ssm(pred.signal, ssm_window);
      const auto m_aug = signal::compute_ssm(pred_aug.signal, ssm_window);
      scores.push_back(signal::ssm_similarity(m, m_aug));
    } catch (const DegenerateSignalError&) {
      ++skip_count;
    }
  }
  if (skipped != nullptr) *skipped = skip_count;
  return scores;
}

ClientRoundResult client_round(const ClientData& client, const BroadcastPayload& payload,
                               int round_idx, const ClientConfig& config, RngStream rng) {
  if (client.train.empty()) throw ClientFailureError("client_round: client '" + client.id + "' has no data");
  config.augment.validate();
  if (config.batch_size == 0) throw ConfigError("client_round: batch_size must be >= 1");

  learner::ModelParams theta = payload.theta;
  theta.validate();

  ClientRoundResult result{ClientReport{theta, 0.0, vmf::BatchStats{
                               vmf::UnitVector(std::vector<double>{1.0, 0.0}), 0.0, 0}},
                           ClientRoundLog{}};
  ClientRoundLog& log = result.log;

  // Consistency score on the received model, before any local update.
  {
    RngStream aug_rng = rng.derive("augment");
    const auto scores =
        consistency_scores(theta, client.train, config.augment, config.ssm_window, aug_rng, &log.s_skipped);
    if (scores.empty())
      throw ClientFailureError("client_round: client '" + client.id + "' produced no usable consistency scores");
    double sum = 0.0;
    for (double s : scores) sum += s;
    log.s = sum / static_cast<double>(scores.size());
    log.s_samples = scores.size();
    result.report.s = log.s;
  }

  // Local training epoch(s).
  const bool payload_has_dist = payload.mu.has_value() && payload.kappa.has_value();
  const bool use_vkl = config.gdlc_enabled && config.apply_gdlc && round_idx > 1 && payload_has_dist;
  const int d = theta.arch.feature_dim();

  vmf::GlobalDistState pooled;
  double vkl_sum = 0.0;
  double vkl_min = std::numeric_limits<double>::infinity();
  double vkl_max = -std::numeric_limits<double>::infinity();
  learner::LossBreakdown loss_sum;
  std::size_t loss_batches = 0;

  RngStream shuffle_rng = rng.derive("shuffle");
  for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
    std::vector<std::size_t> order(client.train.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<const signal::SpatioTemporalMap*> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(client.train[order[i]]);

      ++log.batches;
      try {
        const auto ev = learner::eval_batch(theta, batch, config.band, 1.0, config.loss_weights);
        const auto stats = vmf::estimate_batch_stats(ev.features);

        double v_kl = 1.0;
        if (config.gdlc_enabled && payload_has_dist) {
          const vmf::VmfParams local{stats.mu, vmf::kappa_from_rbar(stats.r_bar, d)};
          const vmf::VmfParams global{*payload.mu, *payload.kappa};
          const double d_kl = vmf::kl_divergence(local, global);
          log.batch_d_kl.push_back(d_kl);
          if (use_vkl) v_kl = vmf::vkl_weight(d_kl, config.sigma, config.gamma, config.vkl_form);
        }

        if (config.lr > 0.0) {
          for (std::size_t i = 0; i < theta.theta.size(); ++i)
            theta.theta[i] -= config.lr * v_kl * ev.grad[i];
        }

        pooled = vmf::update_global(pooled, stats);
        vkl_sum += v_kl;
        vkl_min = std::min(vkl_min, v_kl);
        vkl_max = std::max(vkl_max, v_kl);
        loss_sum.bandwidth += ev.loss.bandwidth;
        loss_sum.sparsity += ev.loss.sparsity;
        loss_sum.variation += ev.loss.variation;
        loss_sum.total += ev.loss.total;
        ++loss_batches;
      } catch (const DegenerateSpectrumError&) {
        ++log.skipped_batches;
      } catch (const DegenerateResultantError&) {
        ++log.skipped_batches;
      } catch (const DegenerateFusionError&) {
        ++log.skipped_batches;
      }
    }
  }

  if (loss_batches == 0)
    throw ClientFailureError("client_round: client '" + client.id + "' had a fully degenerate epoch");

  const double nb = static_cast<double>(loss_batches);
  log.v_kl_mean = vkl_sum / nb;
  log.v_kl_min = vkl_min;
  log.v_kl_max = vkl_max;
  log.mean_loss = {loss_sum.bandwidth / nb, loss_sum.sparsity / nb, loss_sum.variation / nb,
                   loss_sum.total / nb};

  result.report.theta = std::move(theta);
  result.report.stats = vmf::BatchStats{pooled.mu(), pooled.r_bar(), pooled.n_total()};
  return result;
}

namespace {

AggregateResult weighted_sum(const std::vector<const learner::ModelParams*>& thetas,
                             const std::vector<double>& weights) {
  const auto& arch = thetas.front()->arch;
  const std::size_t p = thetas.front()->theta.size();
  learner::ModelParams out{arch, std::vector<double>(p, 0.0)};
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    if (thetas[i]->theta.size() != p || !(thetas[i]->arch == arch))
      throw ShapeError("aggregate: inconsistent parameter vectors");
    for (std::size_t j = 0; j < p; ++j) out.theta[j] += weights[i] * thetas[i]->theta[j];
  }
  return AggregateResult{std::move(out), weights};
}

std::vector<double> size_fractions(const std::vector<double>& sizes) {
  double total = 0.0;
  for (double s : sizes) {
    if (!(s > 0.0)) throw DomainError("aggregate: client sizes must be > 0");
    total += s;
  }
  std::vector<double> p(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) p[i] = sizes[i] / total;
  return p;
}

}  // namespace

AggregateResult aggregate_fedavg(const std::vector<const learner::ModelParams*>& thetas,
                                 const std::vector<double>& sizes) {
  if (thetas.empty()) throw EmptyBatchError("aggregate_fedavg: no reports");
  if (thetas.size() != sizes.size()) throw ShapeError("aggregate_fedavg: sizes mismatch");
  return weighted_sum(thetas, size_fractions(sizes));
}

AggregateResult aggregate_mba(const std::vector<const learner::ModelParams*>& thetas,
                              const std::vector<double>& scores, const std::vector<double>& sizes,
                              double tau, bool renormalize) {
  if (thetas.empty()) throw EmptyBatchError("aggregate_mba: no reports");
  if (thetas.size() != scores.size() || thetas.size() != sizes.size())
    throw ShapeError("aggregate_mba: scores/sizes mismatch");
  if (!(tau > 0.0)) throw DomainError("aggregate_mba: tau must be > 0");

  const double k = static_cast<double>(thetas.size());
  const double s_max = *std::max_element(scores.begin(), scores.end());
  std::vector<double> soft(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    soft[i] = std::exp((scores[i] - s_max) / tau);
    z += soft[i];
  }
  const std::vector<double> p = size_fractions(sizes);
  std::vector<double> w(scores.size());
  double w_sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = k * (soft[i] / z) * p[i];
    w_sum += w[i];
  }
  if (renormalize) {
    for (double& x : w) x /= w_sum;
  }
  return weighted_sum(thetas, w);
}

ServerState server_round(const ServerState& server, const std::vector<const ClientReport*>& reports,
                         ServerRoundLog* log) {
  server.policy.validate();
  std::vector<const learner::ModelParams*> thetas;
  std::vector<double> scores;
  std::vector<double> sizes;
  for (const auto* r : reports) {
    if (r == nullptr) continue;
    thetas.push_back(&r->theta);
    scores.push_back(r->s);
    sizes.push_back(static_cast<double>(r->stats.n));
  }
  if (thetas.empty()) throw EmptyBatchError("server_round: no valid reports");

  ServerState next = server;

  // Stats folds in ascending client order (the caller indexes reports by
  // canonical client order, so vector order is id order).
  std::size_t skipped = 0;
  for (const auto* r : reports) {
    if (r == nullptr) continue;
    try {
      next.dist = vmf::update_global(next.dist, r->stats);
    } catch (const DegenerateFusionError&) {
      ++skipped;
      std::cerr << "server_round: skipping degenerate stats fold\n";
    }
  }

  AggregateResult agg =
      server.policy.kind == AggregationPolicy::Kind::kFedAvg
          ? aggregate_fedavg(thetas, sizes)
          : aggregate_mba(thetas, scores, sizes, server.policy.tau, server.policy.renormalize_weights);
  next.theta = std::move(agg.theta);
  next.round = server.round + 1;
  if (log != nullptr) {
    log->weights = std::move(agg.weights);
    log->skipped_folds = skipped;
  }
  return next;
}

BroadcastPayload make_broadcast(const ServerState& server) {
  BroadcastPayload p{server.theta, std::nullopt, std::nullopt};
  if (server.dist.initialized()) {
    p.mu = server.dist.mu();
    p.kappa = server.dist.kappa();
  }
  return p;
}

RunResult run_rounds(const learner::ModelParams& initial, const vmf::GlobalDistState& initial_dist,
                     const std::vector<ClientData>& clients, const RunOptions& opts) {
  if (clients.empty()) throw ConfigError("run_rounds: no clients");
  opts.policy.validate();
  if (opts.rounds < 0) throw ConfigError("run_rounds: negative round count");

  RunResult result;
  result.server = ServerState{initial, initial_dist, opts.start_round, opts.policy};
  result.calibrated_sigma = opts.calibrated_sigma;

  const bool auto_sigma = opts.gdlc.enabled && opts.gdlc.calibration == GdlcOptions::Calibration::kAutoP90;

  for (int round = opts.start_round; round < opts.rounds; ++round) {
    const BroadcastPayload payload = make_broadcast(result.server);

    ClientConfig cc = opts.client;
    cc.gdlc_enabled = opts.gdlc.enabled;
    cc.gamma = opts.gdlc.gamma;
    cc.vkl_form = opts.gdlc.form;
    if (auto_sigma) {
      // Round 2 only records KL values; weighting starts once sigma exists.
      cc.apply_gdlc = result.calibrated_sigma.has_value();
      cc.sigma = result.calibrated_sigma.value_or(opts.gdlc.sigma);
    } else {
      cc.apply_gdlc = true;
      cc.sigma = opts.gdlc.sigma;
    }

    // Client rounds, parallel over clients; every client draws from its own
    // (seed, round, client) stream so scheduling cannot change results.
    const std::size_t k = clients.size();
    std::vector<std::optional<ClientRoundResult>> results(k);
    std::vector<std::string> failures(k);
    const int n_threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(k)));

    auto work = [&](std::size_t ci) {
      RngStream rng = RngStream(opts.seed, "client_round", fnv1a64(clients[ci].id))
                          .derive("round", static_cast<std::uint64_t>(round));
      try {
        results[ci] = client_round(clients[ci], payload, round, cc, std::move(rng));
      } catch (const ClientFailureError& e) {
        failures[ci] = e.what();
      }
    };

    if (n_threads == 1) {
      for (std::size_t ci = 0; ci < k; ++ci) work(ci);
    } else {
      std::vector<std::thread> pool;
      std::atomic<std::size_t> cursor{0};
      for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
          for (;;) {
            const std::size_t ci = cursor.fetch_add(1);
            if (ci >= k) break;
            work(ci);
          }
        });
      }
      for (auto& th : pool) th.join();
    }

    std::vector<const ClientReport*> reports(k, nullptr);
    for (std::size_t ci = 0; ci < k; ++ci) {
      if (results[ci].has_value()) {
        reports[ci] = &results[ci]->report;
      } else {
        std::cerr << "round " << round << ": excluding client '" << clients[ci].id
                  << "': " << failures[ci] << "\n";
      }
    }

    ServerRoundLog server_log;
    result.server = server_round(result.server, reports, &server_log);

    // Sigma calibration from the first GDLC-eligible round's KL values.
    if (auto_sigma && !result.calibrated_sigma.has_value() && round >= 2) {
      std::vector<double> all_dkl;
      for (const auto& r : results) {
        if (r.has_value())
          all_dkl.insert(all_dkl.end(), r->log.batch_d_kl.begin(), r->log.batch_d_kl.end());
      }
      if (!all_dkl.empty()) result.calibrated_sigma = quantile_of(std::move(all_dkl), 0.90);
    }

    RoundRecord record;
    record.round = round;
    {
      std::size_t wi = 0;
      for (std::size_t ci = 0; ci < k; ++ci) {
        RoundClientRecord cr;
        cr.id = clients[ci].id;
        cr.participated = results[ci].has_value();
        if (cr.participated) {
          cr.log = results[ci]->log;
          cr.report_r_bar = results[ci]->report.stats.r_bar;
          cr.report_n = results[ci]->report.stats.n;
        }
        record.clients.push_back(std::move(cr));
        if (results[ci].has_value()) ++wi;
      }
      (void)wi;
    }
    record.weights = server_log.weights;
    record.skipped_folds = server_log.skipped_folds;
    if (result.server.dist.initialized()) {
      record.dist_kappa = result.server.dist.kappa();
      record.dist_r_bar = result.server.dist.r_bar();
      record.dist_n = result.server.dist.n_total();
      record.dist_mu = result.server.dist.mu().components();
    }
    record.sigma_used = cc.apply_gdlc && opts.gdlc.enabled ? cc.sigma
                                                           : std::numeric_limits<double>::quiet_NaN();
    if (opts.evaluator) record.eval_json = opts.evaluator(result.server.theta, round);
    if (opts.round_hook) opts.round_hook(record);
    result.history.push_back(std::move(record));

    if (opts.checkpoint_hook) opts.checkpoint_hook(result.server, result.calibrated_sigma);
  }
  return result;
}

}  // namespace fedhug::fed
