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
#include "fedhug/config.hpp"

#include <fstream>

#include "fedhug/errors.hpp"
#include "fedhug/serialize.hpp"

namespace fedhug::cfg {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError("config: unknown key '" + where + (where.empty() ? "" : ".") + key + "'");
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: key '") + key + "' has the wrong type");
  }
}

json merge(json base, const json& overlay) {
  if (!overlay.is_object() || !base.is_object()) return overlay;
  for (const auto& [key, value] : overlay.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object()) {
      base[key] = merge(base[key], value);
    } else {
      base[key] = value;
    }
  }
  return base;
}

synth::HrDistributionSpec parse_hr(const json& j, const std::string& where) {
  check_keys(j, where, {"kind", "median_bpm", "log_sigma", "components", "hr_min", "hr_max"});
  synth::HrDistributionSpec spec;
  const auto kind = get_or<std::string>(j, "kind", "lognormal");
  if (kind == "lognormal") {
    spec.kind = synth::HrDistributionSpec::Kind::kTruncatedLognormal;
  } else if (kind == "mixture") {
    spec.kind = synth::HrDistributionSpec::Kind::kGaussianMixture;
  } else if (kind == "uniform") {
    spec.kind = synth::HrDistributionSpec::Kind::kUniform;
  } else {
    throw ConfigError("config: unknown HR distribution kind '" + kind + "'");
  }
  spec.median_bpm = get_or(j, "median_bpm", spec.median_bpm);
  spec.log_sigma = get_or(j, "log_sigma", spec.log_sigma);
  spec.hr_min = get_or(j, "hr_min", spec.hr_min);
  spec.hr_max = get_or(j, "hr_max", spec.hr_max);
  if (j.contains("components")) {
    for (const auto& cj : j.at("components")) {
      check_keys(cj, where + ".components[]", {"mean_bpm", "sigma_bpm", "weight"});
      synth::HrDistributionSpec::MixtureComponent c;
      c.mean_bpm = get_or(cj, "mean_bpm", c.mean_bpm);
      c.sigma_bpm = get_or(cj, "sigma_bpm", c.sigma_bpm);
      c.weight = get_or(cj, "weight", c.weight);
      spec.components.push_back(c);
    }
  }
  return spec;
}

synth::BiasSpec parse_bias(const json& j, const std::string& where) {
  check_keys(j, where, {"row_gain_sigma", "noise_sigma", "drift_amp", "drift_freq", "harmonic_ratio"});
  synth::BiasSpec b;
  b.row_gain_sigma = get_or(j, "row_gain_sigma", b.row_gain_sigma);
  b.noise_sigma = get_or(j, "noise_sigma", b.noise_sigma);
  b.drift_amp = get_or(j, "drift_amp", b.drift_amp);
  b.drift_freq = get_or(j, "drift_freq", b.drift_freq);
  b.harmonic_ratio = get_or(j, "harmonic_ratio", b.harmonic_ratio);
  return b;
}

synth::ClientProfile parse_profile(const json& j, const std::string& where) {
  check_keys(j, where, {"id", "n_samples", "shape", "fs", "hr", "bias"});
  synth::ClientProfile p;
  if (!j.contains("id")) throw ConfigError("config: profile '" + where + "' needs an id");
  p.id = j.at("id").get<std::string>();
  p.n_samples = get_or(j, "n_samples", p.n_samples);
  if (j.contains("shape")) {
    const auto shape = j.at("shape").get<std::vector<int>>();
    if (shape.size() != 3) throw ConfigError("config: profile shape must be [T, S, C]");
    p.time_steps = shape[0];
    p.rows = shape[1];
    p.channels = shape[2];
  }
  p.fs = get_or(j, "fs", p.fs);
  if (j.contains("hr")) p.hr_dist = parse_hr(j.at("hr"), where + ".hr");
  if (j.contains("bias")) p.bias = parse_bias(j.at("bias"), where + ".bias");
  return p;
}

json hr_to_json(const synth::HrDistributionSpec& s) {
  json j;
  switch (s.kind) {
    case synth::HrDistributionSpec::Kind::kTruncatedLognormal:
      j["kind"] = "lognormal";
      j["median_bpm"] = s.median_bpm;
      j["log_sigma"] = s.log_sigma;
      break;
    case synth::HrDistributionSpec::Kind::kGaussianMixture: {
      j["kind"] = "mixture";
      j["components"] = json::array();
      for (const auto& c : s.components)
        j["components"].push_back({{"mean_bpm", c.mean_bpm}, {"sigma_bpm", c.sigma_bpm}, {"weight", c.weight}});
      break;
    }
    case synth::HrDistributionSpec::Kind::kUniform:
      j["kind"] = "uniform";
      break;
  }
  j["hr_min"] = s.hr_min;
  j["hr_max"] = s.hr_max;
  return j;
}

json profile_to_json(const synth::ClientProfile& p) {
  return {{"id", p.id},
          {"n_samples", p.n_samples},
          {"shape", {p.time_steps, p.rows, p.channels}},
          {"fs", p.fs},
          {"hr", hr_to_json(p.hr_dist)},
          {"bias",
           {{"row_gain_sigma", p.bias.row_gain_sigma},
            {"noise_sigma", p.bias.noise_sigma},
            {"drift_amp", p.bias.drift_amp},
            {"drift_freq", p.bias.drift_freq},
            {"harmonic_ratio", p.bias.harmonic_ratio}}}};
}

}  // namespace

learner::ModelArch ExperimentConfig::arch() const {
  learner::ModelArch a;
  a.time_steps = benchmark.pretrain.time_steps;
  a.rows = benchmark.pretrain.rows;
  a.channels = benchmark.pretrain.channels;
  a.filters = model_filters;
  a.taps = model_taps;
  a.active_taps = model_taps;
  a.validate();
  return a;
}

std::string ExperimentConfig::config_hash() const { return io::hash_hex(resolved.dump()); }

nlohmann::json preset_config(const std::string& name) {
  auto profile = [](const char* id, int n, json hr, json bias) {
    return json{{"id", id}, {"n_samples", n}, {"shape", {256, 25, 3}}, {"fs", 30.0},
                {"hr", std::move(hr)}, {"bias", std::move(bias)}};
  };
  auto lognormal = [](double median, double sigma) {
    return json{{"kind", "lognormal"}, {"median_bpm", median}, {"log_sigma", sigma},
                {"hr_min", 45.0}, {"hr_max", 175.0}};
  };

  json j;
  if (name == "rppg-4") {
    j["benchmark"] = {
        {"pretrain", profile("pre", 2000,
                             {{"kind", "uniform"}, {"hr_min", 50.0}, {"hr_max", 110.0}},
                             {{"row_gain_sigma", 0.1}, {"noise_sigma", 0.1}, {"harmonic_ratio", 0.2}})},
        {"clients",
         json::array({
             profile("c0_clean", 250, lognormal(70.0, 0.16),
                     {{"row_gain_sigma", 0.05}, {"noise_sigma", 0.05}, {"harmonic_ratio", 0.15}}),
             profile("c1_gain", 250, lognormal(66.0, 0.18),
                     {{"row_gain_sigma", 0.7}, {"noise_sigma", 0.15}, {"drift_amp", 0.4},
                      {"drift_freq", 0.2}, {"harmonic_ratio", 0.2}}),
             profile("c2_drift", 250, lognormal(76.0, 0.2),
                     {{"row_gain_sigma", 0.2}, {"noise_sigma", 0.3}, {"drift_amp", 1.8},
                      {"drift_freq", 0.3}, {"harmonic_ratio", 0.25}}),
             profile("c3_noisy", 250, lognormal(82.0, 0.24),
                     {{"row_gain_sigma", 0.5}, {"noise_sigma", 2.0}, {"drift_amp", 1.0},
                      {"drift_freq", 0.25}, {"harmonic_ratio", 0.35}}),
         })},
        {"target", profile("t_unseen", 400,
                           {{"kind", "mixture"},
                            {"components", json::array({
                                 json{{"mean_bpm", 72.0}, {"sigma_bpm", 9.0}, {"weight", 0.65}},
                                 json{{"mean_bpm", 126.0}, {"sigma_bpm", 16.0}, {"weight", 0.35}},
                             })},
                            {"hr_min", 45.0}, {"hr_max", 175.0}},
                           {{"row_gain_sigma", 0.35}, {"noise_sigma", 0.8}, {"drift_amp", 1.2},
                            {"drift_freq", 0.35}, {"harmonic_ratio", 0.3}})},
    };
    j["batch_size"] = 25;
  } else if (name == "mmwave-3") {
    auto radar_profile = [](const char* id, int n, json hr, json bias) {
      return json{{"id", id}, {"n_samples", n}, {"shape", {256, 2, 5}}, {"fs", 30.0},
                  {"hr", std::move(hr)}, {"bias", std::move(bias)}};
    };
    j["benchmark"] = {
        {"pretrain", radar_profile("pre", 1200,
                                   {{"kind", "uniform"}, {"hr_min", 50.0}, {"hr_max", 110.0}},
                                   {{"row_gain_sigma", 0.1}, {"noise_sigma", 0.2}, {"harmonic_ratio", 0.25}})},
        {"clients",
         json::array({
             radar_profile("r0_flat", 200, lognormal(68.0, 0.17),
                           {{"row_gain_sigma", 0.1}, {"noise_sigma", 0.2}, {"harmonic_ratio", 0.2}}),
             radar_profile("r1_urban", 200, lognormal(75.0, 0.2),
                           {{"row_gain_sigma", 0.4}, {"noise_sigma", 1.0}, {"drift_amp", 0.8},
                            {"drift_freq", 0.3}, {"harmonic_ratio", 0.3}}),
             radar_profile("r2_bumpy", 200, lognormal(84.0, 0.22),
                           {{"row_gain_sigma", 0.6}, {"noise_sigma", 2.5}, {"drift_amp", 1.5},
                            {"drift_freq", 0.25}, {"harmonic_ratio", 0.4}}),
         })},
        {"target", radar_profile("r_target", 300,
                                 {{"kind", "mixture"},
                                  {"components", json::array({
                                       json{{"mean_bpm", 70.0}, {"sigma_bpm", 8.0}, {"weight", 0.6}},
                                       json{{"mean_bpm", 120.0}, {"sigma_bpm", 15.0}, {"weight", 0.4}},
                                   })},
                                  {"hr_min", 45.0}, {"hr_max", 175.0}},
                                 {{"row_gain_sigma", 0.3}, {"noise_sigma", 1.2}, {"drift_amp", 1.0},
                                  {"drift_freq", 0.35}, {"harmonic_ratio", 0.3}})},
    };
    j["batch_size"] = 25;
  } else {
    throw ConfigError("config: unknown preset '" + name + "'");
  }
  return j;
}

ExperimentConfig parse_config(const nlohmann::json& input) {
  json j = input;
  if (j.contains("benchmark") && j.at("benchmark").is_object() && j.at("benchmark").contains("preset")) {
    check_keys(j.at("benchmark"), "benchmark", {"preset"});
    const auto preset = preset_config(j.at("benchmark").at("preset").get<std::string>());
    json overlay = j;
    overlay.erase("benchmark");
    j = merge(preset, overlay);
  }

  check_keys(j, "",
             {"benchmark", "dataset_path", "model", "rounds", "lr", "batch_size", "local_epochs",
              "policy", "gdlc", "band", "augment", "ssm", "loss_weights", "pretrain", "seeds",
              "eval", "checkpoint_every", "threads", "output_dir", "beta"});

  ExperimentConfig c;
  c.beta_present = j.contains("beta");

  if (!j.contains("benchmark")) throw ConfigError("config: missing 'benchmark'");
  {
    const auto& b = j.at("benchmark");
    check_keys(b, "benchmark", {"pretrain", "clients", "target"});
    if (!b.contains("pretrain") || !b.contains("clients") || !b.contains("target"))
      throw ConfigError("config: benchmark needs pretrain, clients and target");
    c.benchmark.pretrain = parse_profile(b.at("pretrain"), "benchmark.pretrain");
    for (const auto& cj : b.at("clients"))
      c.benchmark.clients.push_back(parse_profile(cj, "benchmark.clients[]"));
    c.benchmark.target = parse_profile(b.at("target"), "benchmark.target");
  }
  c.dataset_path = get_or<std::string>(j, "dataset_path", "");

  if (j.contains("model")) {
    check_keys(j.at("model"), "model", {"filters", "taps"});
    c.model_filters = get_or(j.at("model"), "filters", c.model_filters);
    c.model_taps = get_or(j.at("model"), "taps", c.model_taps);
  }

  c.rounds = get_or(j, "rounds", c.rounds);
  c.lr = get_or(j, "lr", c.lr);
  c.batch_size = get_or<std::size_t>(j, "batch_size", c.batch_size);
  c.local_epochs = get_or(j, "local_epochs", c.local_epochs);

  if (j.contains("policy")) {
    const auto& p = j.at("policy");
    check_keys(p, "policy", {"kind", "tau", "renormalize_weights"});
    const auto kind = get_or<std::string>(p, "kind", "mba");
    if (kind == "mba") {
      c.policy.kind = fed::AggregationPolicy::Kind::kMba;
    } else if (kind == "fedavg") {
      c.policy.kind = fed::AggregationPolicy::Kind::kFedAvg;
    } else {
      throw ConfigError("config: policy.kind must be 'mba' or 'fedavg'");
    }
    c.policy.tau = get_or(p, "tau", c.policy.tau);
    c.policy.renormalize_weights = get_or(p, "renormalize_weights", c.policy.renormalize_weights);
  }

  if (j.contains("gdlc")) {
    const auto& g = j.at("gdlc");
    check_keys(g, "gdlc", {"enabled", "sigma", "gamma", "calibration", "printed_form"});
    c.gdlc.enabled = get_or(g, "enabled", c.gdlc.enabled);
    c.gdlc.sigma = get_or(g, "sigma", c.gdlc.sigma);
    c.gdlc.gamma = get_or(g, "gamma", c.gdlc.gamma);
    const auto cal = get_or<std::string>(g, "calibration", "auto_p90");
    if (cal == "auto_p90") {
      c.gdlc.calibration = fed::GdlcOptions::Calibration::kAutoP90;
    } else if (cal == "fixed") {
      c.gdlc.calibration = fed::GdlcOptions::Calibration::kFixed;
    } else {
      throw ConfigError("config: gdlc.calibration must be 'auto_p90' or 'fixed'");
    }
    c.gdlc.form = get_or(g, "printed_form", false) ? vmf::VklForm::kPrinted : vmf::VklForm::kLogistic;
  }

  if (j.contains("band")) {
    check_keys(j.at("band"), "band", {"f_lo", "f_hi"});
    c.band.f_lo = get_or(j.at("band"), "f_lo", c.band.f_lo);
    c.band.f_hi = get_or(j.at("band"), "f_hi", c.band.f_hi);
  }

  if (j.contains("augment")) {
    check_keys(j.at("augment"), "augment", {"max_shift_s", "permute_rows", "noise_sigma"});
    c.augment.max_shift_s = get_or(j.at("augment"), "max_shift_s", c.augment.max_shift_s);
    c.augment.permute_rows = get_or(j.at("augment"), "permute_rows", c.augment.permute_rows);
    c.augment.noise_sigma = get_or(j.at("augment"), "noise_sigma", c.augment.noise_sigma);
  }

  if (j.contains("ssm")) {
    check_keys(j.at("ssm"), "ssm", {"window_s"});
    c.ssm_window_s = get_or(j.at("ssm"), "window_s", c.ssm_window_s);
  }

  if (j.contains("loss_weights")) {
    check_keys(j.at("loss_weights"), "loss_weights", {"bandwidth", "sparsity", "variation"});
    c.loss_weights.bandwidth = get_or(j.at("loss_weights"), "bandwidth", c.loss_weights.bandwidth);
    c.loss_weights.sparsity = get_or(j.at("loss_weights"), "sparsity", c.loss_weights.sparsity);
    c.loss_weights.variation = get_or(j.at("loss_weights"), "variation", c.loss_weights.variation);
  }

  if (j.contains("pretrain")) {
    const auto& p = j.at("pretrain");
    check_keys(p, "pretrain", {"epochs", "lr", "batch_size", "plateau_epochs", "min_improvement"});
    c.pretrain.epochs = get_or(p, "epochs", c.pretrain.epochs);
    c.pretrain.lr = get_or(p, "lr", c.pretrain.lr);
    c.pretrain.batch_size = get_or<std::size_t>(p, "batch_size", c.pretrain.batch_size);
    c.pretrain.plateau_epochs = get_or(p, "plateau_epochs", c.pretrain.plateau_epochs);
    c.pretrain.min_improvement = get_or(p, "min_improvement", c.pretrain.min_improvement);
  }

  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (c.seeds.empty()) throw ConfigError("config: seeds must be nonempty");

  if (j.contains("eval")) {
    check_keys(j.at("eval"), "eval", {"target_every"});
    c.target_every = get_or(j.at("eval"), "target_every", c.target_every);
  }
  c.checkpoint_every = get_or(j, "checkpoint_every", c.checkpoint_every);
  c.threads = get_or(j, "threads", c.threads);
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);

  if (c.rounds < 0) throw ConfigError("config: rounds must be >= 0");
  if (!(c.lr >= 0.0)) throw ConfigError("config: lr must be >= 0");
  if (c.batch_size == 0) throw ConfigError("config: batch_size must be >= 1");
  if (c.local_epochs < 1) throw ConfigError("config: local_epochs must be >= 1");
  if (c.threads < 1) throw ConfigError("config: threads must be >= 1");
  if (c.target_every < 1) throw ConfigError("config: eval.target_every must be >= 1");
  c.policy.validate();
  c.benchmark.validate(c.band.f_lo);
  c.arch();  // validates model shape consistency

  // Canonical echo for manifests; re-parsing it reproduces this config.
  json r;
  r["benchmark"] = {{"pretrain", profile_to_json(c.benchmark.pretrain)},
                    {"clients", json::array()},
                    {"target", profile_to_json(c.benchmark.target)}};
  for (const auto& p : c.benchmark.clients) r["benchmark"]["clients"].push_back(profile_to_json(p));
  if (!c.dataset_path.empty()) r["dataset_path"] = c.dataset_path;
  r["model"] = {{"filters", c.model_filters}, {"taps", c.model_taps}};
  r["rounds"] = c.rounds;
  r["lr"] = c.lr;
  r["batch_size"] = c.batch_size;
  r["local_epochs"] = c.local_epochs;
  r["policy"] = {{"kind", c.policy.kind == fed::AggregationPolicy::Kind::kMba ? "mba" : "fedavg"},
                 {"tau", c.policy.tau},
                 {"renormalize_weights", c.policy.renormalize_weights}};
  r["gdlc"] = {{"enabled", c.gdlc.enabled},
               {"sigma", c.gdlc.sigma},
               {"gamma", c.gdlc.gamma},
               {"calibration",
                c.gdlc.calibration == fed::GdlcOptions::Calibration::kAutoP90 ? "auto_p90" : "fixed"},
               {"printed_form", c.gdlc.form == vmf::VklForm::kPrinted}};
  r["band"] = {{"f_lo", c.band.f_lo}, {"f_hi", c.band.f_hi}};
  r["augment"] = {{"max_shift_s", c.augment.max_shift_s},
                  {"permute_rows", c.augment.permute_rows},
                  {"noise_sigma", c.augment.noise_sigma}};
  r["ssm"] = {{"window_s", c.ssm_window_s}};
  r["loss_weights"] = {{"bandwidth", c.loss_weights.bandwidth},
                       {"sparsity", c.loss_weights.sparsity},
                       {"variation", c.loss_weights.variation}};
  r["pretrain"] = {{"epochs", c.pretrain.epochs},
                   {"lr", c.pretrain.lr},
                   {"batch_size", c.pretrain.batch_size},
                   {"plateau_epochs", c.pretrain.plateau_epochs},
                   {"min_improvement", c.pretrain.min_improvement}};
  r["seeds"] = c.seeds;
  r["eval"] = {{"target_every", c.target_every}};
  r["checkpoint_every"] = c.checkpoint_every;
  r["threads"] = c.threads;
  r["output_dir"] = c.output_dir;
  if (c.beta_present) r["beta"] = j.at("beta");
  c.resolved = std::move(r);
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("config: cannot open '" + path + "'");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: parse error in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

}  // namespace fedhug::cfg
