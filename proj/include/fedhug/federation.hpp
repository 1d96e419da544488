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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedhug/learner.hpp"
#include "fedhug/signal.hpp"
#include "fedhug/vmf.hpp"

// The federated protocol engine. By construction this module never sees
// ground truth: client data enters as bare input tensors, evaluation is
// injected as an opaque callback, and the only inter-party value types are
// BroadcastPayload and ClientReport, neither of which has a field that
// could carry per-sample data or labels.
namespace fedhug::fed {

struct AggregationPolicy {
  enum class Kind { kFedAvg, kMba };

  Kind kind = Kind::kMba;
  double tau = 0.1;  // MBA softmax temperature
  /// Divide the realized MBA weights by their sum. Off by default: the
  /// reference weights k * softmax(s/tau) * p sum to 1 only for equal
  /// client sizes, and the realized sum is logged rather than forced.
  bool renormalize_weights = false;

  void validate() const;
};

/// Server -> client message. mu/kappa are absent only before the first
/// aggregation has initialized the global distribution.
struct BroadcastPayload {
  learner::ModelParams theta;
  std::optional<vmf::UnitVector> mu;
  std::optional<double> kappa;
};

/// Client -> server message: parameters, consistency score, batch
/// statistics. No field can hold raw samples, ground truth or
/// pseudo-labels.
struct ClientReport {
  learner::ModelParams theta;
  double s = 0.0;  // in [-1, 1]
  vmf::BatchStats stats;
};

/// Non-owning view of one client's training inputs.
struct ClientData {
  std::string id;
  std::vector<const signal::SpatioTemporalMap*> train;
};

/// Per-round client behavior knobs (broadcast out-of-band by the operator,
/// not part of the wire protocol).
struct ClientConfig {
  learner::FrequencyBand band;
  learner::LossWeights loss_weights;
  signal::AugmentPolicy augment;
  std::size_t ssm_window = 45;  // samples
  double lr = 1e-4;
  std::size_t batch_size = 100;
  int local_epochs = 1;
  bool gdlc_enabled = true;
  /// When false, KL divergences are still recorded (for calibration) but
  /// every batch uses v_kl = 1.
  bool apply_gdlc = true;
  double sigma = 50.0;
  double gamma = 0.5;
  vmf::VklForm vkl_form = vmf::VklForm::kLogistic;
};

/// Simulator-side observability of one client round (never transmitted).
struct ClientRoundLog {
  double s = 0.0;
  std::size_t s_samples = 0;
  std::size_t s_skipped = 0;
  double v_kl_mean = 1.0;
  double v_kl_min = 1.0;
  double v_kl_max = 1.0;
  learner::LossBreakdown mean_loss;
  std::vector<double> batch_d_kl;  // one entry per batch with a defined KL
  std::size_t batches = 0;
  std::size_t skipped_batches = 0;
};

struct ClientRoundResult {
  ClientReport report;
  ClientRoundLog log;
};

/// Per-sample consistency scores: forward the model on each input and on an
/// augmented copy, then take the Frobenius cosine of the two prediction
/// SSMs. Samples whose SSMs are degenerate are skipped and counted.
std::vector<double> consistency_scores(const learner::ModelParams& theta,
                                       const std::vector<const signal::SpatioTemporalMap*>& inputs,
                                       const signal::AugmentPolicy& policy, std::size_t ssm_window,
                                       RngStream& rng, std::size_t* skipped = nullptr);

/// One full client round: install the broadcast model, score consistency
/// with the received model (before any update), run local_epochs of
/// mini-batch updates with per-batch V_KL weighting, pool the per-batch
/// stats with the same size-weighted rule as the server fusion.
/// Throws ClientFailureError when no batch produced a usable update.
ClientRoundResult client_round(const ClientData& client, const BroadcastPayload& payload,
                               int round_idx, const ClientConfig& config, RngStream rng);

struct AggregateResult {
  learner::ModelParams theta;
  std::vector<double> weights;  // realized per-client coefficients
};

/// Plain size-weighted averaging: theta = sum_i N_i / sum_j N_j * theta_i.
AggregateResult aggregate_fedavg(const std::vector<const learner::ModelParams*>& thetas,
                                 const std::vector<double>& sizes);

/// Consistency-weighted aggregation: theta = k * sum_i softmax(s_i/tau) p_i theta_i.
AggregateResult aggregate_mba(const std::vector<const learner::ModelParams*>& thetas,
                              const std::vector<double>& scores, const std::vector<double>& sizes,
                              double tau, bool renormalize = false);

struct ServerState {
  learner::ModelParams theta;
  vmf::GlobalDistState dist;
  int round = 0;
  AggregationPolicy policy;
};

struct ServerRoundLog {
  std::vector<double> weights;     // realized aggregation weights, client order
  std::size_t skipped_folds = 0;   // degenerate-fusion stats folds
};

/// Folds each present report's stats into the global distribution in
/// ascending client order, aggregates parameters per the policy, and
/// increments the round counter. Null entries are clients excluded from
/// this round; aggregation weights renormalize over participants.
ServerState server_round(const ServerState& server, const std::vector<const ClientReport*>& reports,
                         ServerRoundLog* log = nullptr);

BroadcastPayload make_broadcast(const ServerState& server);

struct GdlcOptions {
  bool enabled = true;
  double sigma = 50.0;
  double gamma = 0.5;
  /// kAutoP90 replaces sigma with the 90th percentile of the batch KL
  /// divergences observed in round 2 (the first GDLC-eligible round);
  /// weighting then applies from round 3 on.
  enum class Calibration { kFixed, kAutoP90 };
  Calibration calibration = Calibration::kAutoP90;
  vmf::VklForm form = vmf::VklForm::kLogistic;
};

struct RoundClientRecord {
  std::string id;
  bool participated = true;
  ClientRoundLog log;
  double report_r_bar = 0.0;
  std::uint64_t report_n = 0;
};

struct RoundRecord {
  int round = 0;
  std::vector<RoundClientRecord> clients;
  std::vector<double> weights;
  std::size_t skipped_folds = 0;
  // global distribution snapshot after this round's folds
  double dist_kappa = 0.0;
  double dist_r_bar = 0.0;
  std::uint64_t dist_n = 0;
  std::vector<double> dist_mu;
  double sigma_used = 0.0;  // NaN until GDLC weighting is active
  std::string eval_json;    // serialized evaluation block (injected)
};

struct RunOptions {
  int rounds = 100;
  ClientConfig client;
  AggregationPolicy policy;
  GdlcOptions gdlc;
  int threads = 1;
  std::uint64_t seed = 0;
  int start_round = 0;  // resume support
  std::optional<double> calibrated_sigma;  // carried across a resume
  /// Called after each server round with the new global model; the returned
  /// string (JSON) is stored in the round record.
  std::function<std::string(const learner::ModelParams&, int round)> evaluator;
  /// Called with each completed round record (incremental history flushing).
  std::function<void(const RoundRecord&)> round_hook;
  /// Called after each round for checkpointing side effects.
  std::function<void(const ServerState&, std::optional<double> sigma)> checkpoint_hook;
};

struct RunResult {
  ServerState server;
  std::vector<RoundRecord> history;
  std::optional<double> calibrated_sigma;
};

/// The communication loop: broadcast -> parallel client rounds -> fold &
/// aggregate, `rounds` times. Fully deterministic for a fixed seed,
/// independent of the thread count.
RunResult run_rounds(const learner::ModelParams& initial, const vmf::GlobalDistState& initial_dist,
                     const std::vector<ClientData>& clients, const RunOptions& opts);

}  // namespace fedhug::fed
