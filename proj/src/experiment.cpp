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
#include "fedhug/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "fedhug/errors.hpp"
#include "fedhug/serialize.hpp"

namespace fedhug::exp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::size_t ssm_window_samples(const cfg::ExperimentConfig& config) {
  return static_cast<std::size_t>(std::lround(config.ssm_window_s * config.benchmark.pretrain.fs));
}

std::vector<const signal::SpatioTemporalMap*> input_views(const std::vector<synth::SyntheticSample>& set) {
  std::vector<const signal::SpatioTemporalMap*> v;
  v.reserve(set.size());
  for (const auto& s : set) v.push_back(&s.x);
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << text;
  if (!os) throw IoError("write failed: " + path.string());
}

std::string csv_num(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

synth::Benchmark acquire_benchmark(const cfg::ExperimentConfig& config, std::uint64_t seed) {
  if (!config.dataset_path.empty()) return load_dataset(config.dataset_path);
  return synth::gen_benchmark(config.benchmark, seed);
}

PretrainResult pretrain_model(const synth::Benchmark& bench, const cfg::ExperimentConfig& config,
                              std::uint64_t seed) {
  if (bench.pretrain.empty()) throw ConfigError("pretrain_model: benchmark has no pretrain set");
  const auto arch = config.arch();

  // 4:1 split of the labeled set for the plateau criterion.
  const std::size_t n_train = bench.pretrain.size() * 4 / 5;
  std::vector<const signal::SpatioTemporalMap*> train_x, val_x;
  std::vector<const signal::Waveform*> train_y, val_y;
  for (std::size_t i = 0; i < bench.pretrain.size(); ++i) {
    if (i < n_train) {
      train_x.push_back(&bench.pretrain[i].x);
      train_y.push_back(&bench.pretrain[i].gt_signal);
    } else {
      val_x.push_back(&bench.pretrain[i].x);
      val_y.push_back(&bench.pretrain[i].gt_signal);
    }
  }
  if (train_x.empty() || val_x.empty()) throw ConfigError("pretrain_model: pretrain set too small to split");

  RngStream rng(seed, "pretrain");
  learner::ModelParams model = learner::init_params(arch, config.band, config.benchmark.pretrain.fs, rng);
  learner::AdamOptimizer adam(model.theta.size(), config.pretrain.lr);

  auto val_loss_of = [&](const learner::ModelParams& m) {
    double loss = 0.0;
    for (std::size_t i = 0; i < val_x.size(); ++i)
      loss += learner::supervised_loss(learner::forward(m, *val_x[i]).signal, *val_y[i]);
    return loss / static_cast<double>(val_x.size());
  };

  PretrainResult result{model, val_loss_of(model), 0.0, 0, false};
  const double initial_loss = result.val_loss;
  double best = result.val_loss;
  int stale = 0;
  RngStream shuffle_rng = rng.derive("shuffle");
  for (int epoch = 0; epoch < config.pretrain.epochs; ++epoch) {
    std::vector<std::size_t> order(train_x.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += config.pretrain.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.pretrain.batch_size);
      std::vector<const signal::SpatioTemporalMap*> bx;
      std::vector<const signal::Waveform*> by;
      for (std::size_t i = start; i < stop; ++i) {
        bx.push_back(train_x[order[i]]);
        by.push_back(train_y[order[i]]);
      }
      const auto ev = learner::eval_supervised_batch(model, bx, by);
      adam.step(model.theta, ev.grad);
    }
    result.epochs_run = epoch + 1;
    const double vl = val_loss_of(model);
    if (vl < best - config.pretrain.min_improvement) {
      best = vl;
      stale = 0;
    } else {
      ++stale;
      if (stale >= config.pretrain.plateau_epochs) {
        result.converged = true;
        break;
      }
    }
  }
  result.model = std::move(model);
  result.val_loss = val_loss_of(result.model);
  result.val_pearson = 1.0 - result.val_loss;
  // A run that never moved the validation loss and still predicts poorly is
  // a convergence failure (lr = 0 lands here).
  const bool improved = best < initial_loss - config.pretrain.min_improvement;
  if (!improved && result.val_loss > 0.1)
    throw ConvergenceError("pretrain_model: validation loss did not improve");
  return result;
}

std::vector<double> gt_consistency_scores(const std::vector<synth::SyntheticSample>& samples,
                                          const signal::AugmentPolicy& policy, std::size_t ssm_window,
                                          RngStream& rng) {
  policy.validate();
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& s : samples) {
    // Row permutation and additive input noise do not touch the reference
    // waveform; only the temporal shift carries over.
    const auto params = signal::draw_augment_params(policy, s.gt_signal.fs,
                                                    s.x.rows(), rng);
    const auto shifted = signal::shift_waveform(s.gt_signal, params.shift_samples);
    const auto m = signal::compute_ssm(s.gt_signal, ssm_window);
    const auto m_aug = signal::compute_ssm(shifted, ssm_window);
    scores.push_back(signal::ssm_similarity(m, m_aug));
  }
  return scores;
}

SeedRunResult run_seed(const synth::Benchmark& bench, const learner::ModelParams& initial,
                       const cfg::ExperimentConfig& config, std::uint64_t seed,
                       const std::optional<ResumeState>& resume, const fs::path* run_dir) {
  std::vector<fed::ClientData> clients;
  for (const auto& c : bench.clients) clients.push_back(fed::ClientData{c.id, input_views(c.train)});

  fed::RunOptions opts;
  opts.rounds = config.rounds;
  opts.policy = config.policy;
  opts.gdlc = config.gdlc;
  opts.threads = config.threads;
  opts.seed = seed;
  opts.client.band = config.band;
  opts.client.loss_weights = config.loss_weights;
  opts.client.augment = config.augment;
  opts.client.ssm_window = ssm_window_samples(config);
  opts.client.lr = config.lr;
  opts.client.batch_size = config.batch_size;
  opts.client.local_epochs = config.local_epochs;

  opts.evaluator = [&](const learner::ModelParams& model, int round) {
    json eval;
    auto guarded = [&](const std::vector<synth::SyntheticSample>& set) -> json {
      try {
        return io::eval_result_to_json(metrics::evaluate(model, set, config.band));
      } catch (const EvalIntegrityError& e) {
        return json{{"error", e.what()}};
      }
    };
    eval["val"] = json::object();
    for (const auto& c : bench.clients) eval["val"][c.id] = guarded(c.val);
    const bool last = round == config.rounds - 1;
    if (last || (round + 1) % config.target_every == 0) eval["target"] = guarded(bench.target);
    return eval.dump();
  };

  std::ofstream history;
  if (run_dir != nullptr) {
    fs::create_directories(*run_dir / "checkpoints");
    history.open(*run_dir / "history.jsonl", resume.has_value() ? std::ios::app : std::ios::trunc);
    if (!history) throw IoError("cannot open history file in " + run_dir->string());
    opts.round_hook = [&](const fed::RoundRecord& record) {
      history << io::round_record_to_json(record).dump() << "\n";
      history.flush();
    };
    opts.checkpoint_hook = [&, run_dir](const fed::ServerState& server, std::optional<double> sigma) {
      const bool due = config.checkpoint_every > 0 && server.round % config.checkpoint_every == 0;
      const bool final_round = server.round == config.rounds;
      if (!due && !final_round) return;
      char name[32];
      std::snprintf(name, sizeof(name), "round_%05d", server.round);
      const fs::path base = final_round ? *run_dir / "final" : *run_dir / "checkpoints" / name;
      fs::create_directories(base);
      io::save_model(base / "model.bin", server.theta);
      write_text(base / "dist.json", io::dist_to_json(server.dist).dump(2) + "\n");
      json state{{"round", server.round}};
      state["calibrated_sigma"] = sigma.has_value() ? json(*sigma) : json(nullptr);
      write_text(base / "state.json", state.dump(2) + "\n");
    };
  }

  if (resume.has_value()) {
    opts.start_round = resume->round;
    opts.calibrated_sigma = resume->calibrated_sigma;
  }

  SeedRunResult out;
  out.run = fed::run_rounds(resume.has_value() ? resume->model : initial,
                            resume.has_value() ? resume->dist : vmf::GlobalDistState{}, clients, opts);

  // Final target scoring (per-sample predictions for tail analysis).
  for (const auto& sample : bench.target) {
    try {
      const auto pred = learner::forward(out.run.server.theta, sample.x);
      out.target_pred.push_back(learner::estimate_hr(pred.signal, config.band));
      out.target_gt.push_back(sample.gt_hr);
    } catch (const DegenerateSpectrumError&) {
    }
  }
  if (out.target_pred.size() * 10 < bench.target.size() * 9)
    throw EvalIntegrityError("run_seed: more than 10% of target samples had degenerate spectra");
  out.final_target = metrics::compute_metrics(out.target_pred, out.target_gt,
                                              bench.target.size() - out.target_pred.size());

  // Per-sample consistency of the final model on each client.
  for (const auto& c : bench.clients) {
    RngStream rng(seed, "final_s", fnv1a64(c.id));
    const auto views = input_views(c.train);
    auto scores = fed::consistency_scores(out.run.server.theta, views, config.augment,
                                          ssm_window_samples(config), rng);
    out.final_s_values.emplace_back(c.id, std::move(scores));
  }
  return out;
}

// ---------------------------------------------------------------------------

void cmd_gen(const cfg::ExperimentConfig& config, std::uint64_t seed, const fs::path& out_dir) {
  const auto bench = synth::gen_benchmark(config.benchmark, seed);
  fs::create_directories(out_dir);

  json manifest;
  manifest["config"] = config.resolved;
  manifest["config_hash"] = config.config_hash();
  manifest["seed"] = seed;
  manifest["sets"] = json::object();

  auto dump_set = [&](const std::string& rel, const std::vector<synth::SyntheticSample>& set) {
    const fs::path dir = out_dir / rel;
    fs::create_directories(dir);
    std::uint64_t combined = 14695981039346656037ULL;
    for (std::size_t i = 0; i < set.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "sample_%06zu.bin", i);
      const fs::path p = dir / name;
      io::save_sample(p, set[i]);
      const auto h = io::file_hash_hex(p);
      combined = fnv1a64(std::to_string(combined) + h);
    }
    manifest["sets"][rel] = {{"count", set.size()}, {"hash", io::hash_hex(std::to_string(combined))}};
  };

  dump_set("pretrain", bench.pretrain);
  for (const auto& c : bench.clients) {
    dump_set("client_" + c.id + "/train", c.train);
    dump_set("client_" + c.id + "/val", c.val);
  }
  dump_set("target", bench.target);
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

std::vector<synth::SyntheticSample> load_set(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("dataset: missing directory " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".bin") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<synth::SyntheticSample> set;
  set.reserve(files.size());
  for (const auto& f : files) set.push_back(io::load_sample(f));
  return set;
}

}  // namespace

synth::Benchmark load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream is(manifest_path);
  if (!is) throw IoError("dataset: cannot open " + manifest_path.string());
  json manifest;
  is >> manifest;

  synth::Benchmark bench;
  bench.pretrain = load_set(dir / "pretrain");
  bench.target = load_set(dir / "target");
  const auto& clients = manifest.at("config").at("benchmark").at("clients");
  for (const auto& cj : clients) {
    synth::ClientDataset ds;
    ds.id = cj.at("id").get<std::string>();
    ds.train = load_set(dir / ("client_" + ds.id) / "train");
    ds.val = load_set(dir / ("client_" + ds.id) / "val");
    bench.clients.push_back(std::move(ds));
  }
  return bench;
}

namespace {

fs::path pretrain_dir(const cfg::ExperimentConfig& config, std::uint64_t seed) {
  return fs::path(config.output_dir) / "pretrain" / ("seed_" + std::to_string(seed));
}

}  // namespace

void cmd_pretrain(const cfg::ExperimentConfig& config) {
  for (const auto seed : config.seeds) {
    const fs::path dir = pretrain_dir(config, seed);
    const fs::path model_path = dir / "model.bin";
    const fs::path meta_path = dir / "model.json";
    if (fs::exists(model_path) && fs::exists(meta_path)) {
      std::ifstream is(meta_path);
      json meta;
      is >> meta;
      if (meta.value("converged", false) && meta.value("config_hash", "") == config.config_hash()) {
        std::cerr << "pretrain: seed " << seed << " already converged, skipping\n";
        continue;
      }
    }
    const auto bench = acquire_benchmark(config, seed);
    const auto result = pretrain_model(bench, config, seed);
    if (!result.converged && result.val_pearson < 0.5)
      std::cerr << "pretrain: warning: seed " << seed << " stopped at val pearson "
                << result.val_pearson << "\n";
    fs::create_directories(dir);
    io::save_model(model_path, result.model);
    json meta{{"seed", seed},
              {"config_hash", config.config_hash()},
              {"epochs_run", result.epochs_run},
              {"val_loss", result.val_loss},
              {"val_pearson", result.val_pearson},
              {"converged", result.converged}};
    write_text(meta_path, meta.dump(2) + "\n");
    std::cerr << "pretrain: seed " << seed << " val pearson " << result.val_pearson << " after "
              << result.epochs_run << " epochs\n";
  }
}

namespace {

std::string summary_csv(const std::vector<fed::RoundRecord>& history,
                        const std::vector<std::string>& client_ids) {
  std::ostringstream os;
  os << "round";
  for (const auto& id : client_ids) os << ",s_" << id;
  for (const auto& id : client_ids) os << ",w_" << id;
  for (const auto& id : client_ids) os << ",val_mae_" << id;
  os << ",target_mae\n";
  for (const auto& rec : history) {
    os << rec.round;
    for (const auto& c : rec.clients) os << "," << (c.participated ? csv_num(c.log.s) : "");
    std::size_t wi = 0;
    for (const auto& c : rec.clients) {
      os << ",";
      if (c.participated && wi < rec.weights.size()) os << csv_num(rec.weights[wi++]);
    }
    json eval = rec.eval_json.empty() ? json::object() : json::parse(rec.eval_json);
    for (const auto& id : client_ids) {
      os << ",";
      if (eval.contains("val") && eval["val"].contains(id) && eval["val"][id].contains("mae"))
        os << csv_num(eval["val"][id]["mae"].get<double>());
    }
    os << ",";
    if (eval.contains("target") && eval["target"].contains("mae"))
      os << csv_num(eval["target"]["mae"].get<double>());
    os << "\n";
  }
  return os.str();
}

std::optional<ResumeState> latest_checkpoint(const fs::path& run_dir) {
  const fs::path dir = run_dir / "checkpoints";
  if (!fs::is_directory(dir)) return std::nullopt;
  fs::path best;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && (best.empty() || e.path().filename() > best.filename())) best = e.path();
  }
  if (best.empty()) return std::nullopt;
  std::ifstream is(best / "state.json");
  if (!is) return std::nullopt;
  json state;
  is >> state;
  std::ifstream dist_is(best / "dist.json");
  json dist_j;
  dist_is >> dist_j;
  ResumeState r{io::load_model(best / "model.bin"), io::dist_from_json(dist_j),
                state.at("round").get<int>(), std::nullopt};
  if (!state.at("calibrated_sigma").is_null()) r.calibrated_sigma = state.at("calibrated_sigma").get<double>();
  return r;
}

}  // namespace

void cmd_run(const cfg::ExperimentConfig& config, bool resume) {
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);
  json manifest{{"config", config.resolved}, {"config_hash", config.config_hash()}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");

  json results = json::object();
  std::ostringstream agg;
  agg << "seed,mae,sd,rmse,pearson,n,excluded,calibrated_sigma\n";
  double sum_mae = 0.0, sum_sd = 0.0, sum_rmse = 0.0, sum_p = 0.0;

  for (const auto seed : config.seeds) {
    const auto bench = acquire_benchmark(config, seed);

    const fs::path pdir = pretrain_dir(config, seed);
    learner::ModelParams initial = [&] {
      if (fs::exists(pdir / "model.bin")) return io::load_model(pdir / "model.bin");
      throw IoError("run: missing pretrained checkpoint " + (pdir / "model.bin").string() +
                    " (run the pretrain command first)");
    }();

    const fs::path run_dir = out_dir / "runs" / ("seed_" + std::to_string(seed));
    fs::create_directories(run_dir);
    std::optional<ResumeState> rs;
    if (resume) rs = latest_checkpoint(run_dir);

    const auto result = run_seed(bench, initial, config, seed, rs, &run_dir);

    std::vector<std::string> ids;
    for (const auto& c : bench.clients) ids.push_back(c.id);
    // On resume only the tail rounds were executed; the summary covers them.
    write_text(run_dir / "summary.csv", summary_csv(result.run.history, ids));

    std::ostringstream preds;
    preds << "pred_hr,gt_hr\n";
    for (std::size_t i = 0; i < result.target_pred.size(); ++i)
      preds << csv_num(result.target_pred[i]) << "," << csv_num(result.target_gt[i]) << "\n";
    write_text(run_dir / "target_preds.csv", preds.str());

    std::ostringstream sv;
    sv << "client,sample,s\n";
    for (const auto& [id, scores] : result.final_s_values) {
      for (std::size_t i = 0; i < scores.size(); ++i)
        sv << id << "," << i << "," << csv_num(scores[i]) << "\n";
    }
    write_text(run_dir / "s_values.csv", sv.str());

    const auto& m = result.final_target;
    agg << seed << "," << csv_num(m.mae) << "," << csv_num(m.sd) << "," << csv_num(m.rmse) << ","
        << csv_num(m.pearson) << "," << m.n << "," << m.excluded << ",";
    if (result.run.calibrated_sigma.has_value()) agg << csv_num(*result.run.calibrated_sigma);
    agg << "\n";
    sum_mae += m.mae;
    sum_sd += m.sd;
    sum_rmse += m.rmse;
    sum_p += m.pearson;

    json rj = io::eval_result_to_json(m);
    rj["calibrated_sigma"] =
        result.run.calibrated_sigma.has_value() ? json(*result.run.calibrated_sigma) : json(nullptr);
    results[std::to_string(seed)] = std::move(rj);
    std::cerr << "run: seed " << seed << " target mae " << m.mae << "\n";
  }

  const double ns = static_cast<double>(config.seeds.size());
  agg << "mean," << csv_num(sum_mae / ns) << "," << csv_num(sum_sd / ns) << ","
      << csv_num(sum_rmse / ns) << "," << csv_num(sum_p / ns) << ",,,\n";
  write_text(out_dir / "aggregate.csv", agg.str());
  write_text(out_dir / "results.json", results.dump(2) + "\n");
}

namespace {

struct RunSummary {
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::map<std::uint64_t, metrics::EvalResult> per_seed;
  std::vector<double> pooled_pred, pooled_gt;  // target predictions across seeds
  std::vector<double> pooled_s;                // final-model consistency scores
};

RunSummary read_run(const fs::path& dir) {
  RunSummary rs;
  rs.label = dir.filename().string();
  std::ifstream is(dir / "results.json");
  if (!is) throw IoError("report: missing results.json in " + dir.string());
  json results;
  is >> results;
  for (const auto& [key, value] : results.items()) {
    const auto seed = static_cast<std::uint64_t>(std::stoull(key));
    metrics::EvalResult m;
    m.mae = value.at("mae").get<double>();
    m.sd = value.at("sd").get<double>();
    m.rmse = value.at("rmse").get<double>();
    m.pearson = value.at("pearson").get<double>();
    m.n = value.at("n").get<std::size_t>();
    rs.per_seed[seed] = m;
    rs.seeds.push_back(seed);
  }
  std::sort(rs.seeds.begin(), rs.seeds.end());

  for (const auto seed : rs.seeds) {
    const fs::path run_dir = dir / "runs" / ("seed_" + std::to_string(seed));
    std::ifstream preds(run_dir / "target_preds.csv");
    if (preds) {
      std::string line;
      std::getline(preds, line);  // header
      while (std::getline(preds, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        rs.pooled_pred.push_back(std::stod(line.substr(0, comma)));
        rs.pooled_gt.push_back(std::stod(line.substr(comma + 1)));
      }
    }
    std::ifstream sv(run_dir / "s_values.csv");
    if (sv) {
      std::string line;
      std::getline(sv, line);
      while (std::getline(sv, line)) {
        const auto last = line.rfind(',');
        if (last == std::string::npos) continue;
        rs.pooled_s.push_back(std::stod(line.substr(last + 1)));
      }
    }
  }
  return rs;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

void cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw ConfigError("report: need at least one run directory");
  std::vector<RunSummary> runs;
  for (const auto& d : run_dirs) runs.push_back(read_run(d));
  fs::create_directories(out_dir);

  // Per-method mean +- sd of the headline metrics.
  {
    std::ostringstream os;
    os << "method,mae_mean,mae_sd,sd_mean,sd_sd,rmse_mean,rmse_sd,pearson_mean,pearson_sd,seeds\n";
    for (const auto& r : runs) {
      std::vector<double> mae, sd, rmse, p;
      for (const auto& [seed, m] : r.per_seed) {
        mae.push_back(m.mae);
        sd.push_back(m.sd);
        rmse.push_back(m.rmse);
        p.push_back(m.pearson);
      }
      os << r.label << "," << csv_num(mean_of(mae)) << "," << csv_num(sd_of(mae)) << ","
         << csv_num(mean_of(sd)) << "," << csv_num(sd_of(sd)) << "," << csv_num(mean_of(rmse)) << ","
         << csv_num(sd_of(rmse)) << "," << csv_num(mean_of(p)) << "," << csv_num(sd_of(p)) << ","
         << r.per_seed.size() << "\n";
    }
    write_text(out_dir / "comparison.csv", os.str());
  }

  // Paired per-seed MAE differences against the first run (the baseline).
  {
    std::vector<std::uint64_t> common = runs.front().seeds;
    for (const auto& r : runs) {
      std::vector<std::uint64_t> next;
      std::set_intersection(common.begin(), common.end(), r.seeds.begin(), r.seeds.end(),
                            std::back_inserter(next));
      common = std::move(next);
    }
    bool mismatched = false;
    for (const auto& r : runs) mismatched |= r.seeds != runs.front().seeds;
    if (mismatched)
      std::cerr << "report: warning: seed sets differ across runs; pairing over the intersection ("
                << common.size() << " seeds)\n";

    std::ostringstream os;
    os << "seed";
    for (const auto& r : runs) os << ",mae_" << r.label;
    for (std::size_t i = 1; i < runs.size(); ++i) os << ",diff_" << runs[i].label;
    os << "\n";
    std::vector<int> negative(runs.size(), 0);
    for (const auto seed : common) {
      os << seed;
      for (const auto& r : runs) os << "," << csv_num(r.per_seed.at(seed).mae);
      for (std::size_t i = 1; i < runs.size(); ++i) {
        const double diff = runs[i].per_seed.at(seed).mae - runs.front().per_seed.at(seed).mae;
        if (diff < 0.0) ++negative[i];
        os << "," << csv_num(diff);
      }
      os << "\n";
    }
    os << "negative_diffs";
    for (std::size_t i = 0; i < runs.size(); ++i) os << ",";
    for (std::size_t i = 1; i < runs.size(); ++i) os << "," << negative[i] << "/" << common.size();
    os << "\n";
    write_text(out_dir / "paired.csv", os.str());
  }

  // Tail-interval table over pooled predictions.
  {
    std::ostringstream os;
    os << "method,interval_lo,interval_hi,n,mae\n";
    for (const auto& r : runs) {
      if (r.pooled_pred.size() < 10) continue;
      const auto tr = metrics::tail_report(r.pooled_pred, r.pooled_gt);
      auto row = [&](const std::string& lo, const std::string& hi, const metrics::TailReport::Interval& iv) {
        os << r.label << "," << lo << "," << hi << "," << iv.n << ",";
        if (iv.mae.has_value()) os << csv_num(*iv.mae);
        os << "\n";
      };
      row("low_tail", csv_num(tr.tail_lo_edge), tr.low_tail);
      for (const auto& iv : tr.intervals) {
        if (iv.n > 0) row(csv_num(iv.lo), csv_num(iv.hi), iv);
      }
      row(csv_num(tr.tail_hi_edge), "high_tail", tr.high_tail);
    }
    write_text(out_dir / "tails.csv", os.str());
  }

  // s histograms.
  for (const auto& r : runs) {
    if (r.pooled_s.empty()) continue;
    const auto d = metrics::s_distribution(r.pooled_s);
    std::ostringstream os;
    os << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < d.counts.size(); ++b)
      os << csv_num(d.bin_edges[b]) << "," << csv_num(d.bin_edges[b + 1]) << "," << d.counts[b] << "\n";
    os << "mean," << csv_num(d.mean) << ",\nmedian," << csv_num(d.median) << ",\n";
    write_text(out_dir / ("s_hist_" + r.label + ".csv"), os.str());
  }

  std::cerr << "report: wrote comparison for " << runs.size() << " run(s) to " << out_dir << "\n";
}

}  // namespace fedhug::exp
