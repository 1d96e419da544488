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
#include "fedhug/serialize.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fedhug/errors.hpp"

namespace fedhug::io {

namespace {

constexpr char kMagic[4] = {'F', 'H', 'U', 'G'};
constexpr std::uint16_t kVersion = 1;

enum Kind : std::uint16_t { kWaveform = 1, kStmap = 2, kModel = 3, kSample = 4 };

void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <class T>
void put_le(std::ostream& os, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  auto u = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(u >> (8 * i));
  put_bytes(os, buf, sizeof(T));
}

void put_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }
void put_f32(std::ostream& os, float v) { put_le(os, std::bit_cast<std::uint32_t>(v)); }

void get_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!is) throw IoError("container: truncated input");
}

template <class T>
T get_le(std::istream& is) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  get_bytes(is, buf, sizeof(T));
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
  return static_cast<T>(u);
}

double get_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }
float get_f32(std::istream& is) { return std::bit_cast<float>(get_le<std::uint32_t>(is)); }

void write_header(std::ostream& os, Kind kind) {
  put_bytes(os, kMagic, 4);
  put_le(os, kVersion);
  put_le(os, static_cast<std::uint16_t>(kind));
}

Kind read_header(std::istream& is) {
  char magic[4];
  get_bytes(is, magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("container: bad magic");
  const auto version = get_le<std::uint16_t>(is);
  if (version != kVersion) throw IoError("container: unsupported version");
  return static_cast<Kind>(get_le<std::uint16_t>(is));
}

void expect_kind(std::istream& is, Kind want, const char* what) {
  if (read_header(is) != want) throw IoError(std::string("container: expected ") + what);
}

}  // namespace

void write_waveform(std::ostream& os, const signal::Waveform& w) {
  write_header(os, kWaveform);
  put_le(os, static_cast<std::uint64_t>(w.samples.size()));
  put_f64(os, w.fs);
  for (double v : w.samples) put_f64(os, v);
}

signal::Waveform read_waveform(std::istream& is) {
  expect_kind(is, kWaveform, "waveform");
  const auto n = get_le<std::uint64_t>(is);
  const double fs = get_f64(is);
  std::vector<double> samples(n);
  for (auto& v : samples) v = get_f64(is);
  return signal::Waveform(std::move(samples), fs);
}

void write_stmap(std::ostream& os, const signal::SpatioTemporalMap& x) {
  write_header(os, kStmap);
  put_le(os, static_cast<std::uint32_t>(x.time_steps()));
  put_le(os, static_cast<std::uint32_t>(x.rows()));
  put_le(os, static_cast<std::uint32_t>(x.channels()));
  put_f64(os, x.fs());
  for (float v : x.values()) put_f32(os, v);
}

signal::SpatioTemporalMap read_stmap(std::istream& is) {
  expect_kind(is, kStmap, "stmap");
  const auto t = get_le<std::uint32_t>(is);
  const auto s = get_le<std::uint32_t>(is);
  const auto c = get_le<std::uint32_t>(is);
  const double fs = get_f64(is);
  std::vector<float> values(static_cast<std::size_t>(t) * s * c);
  for (auto& v : values) v = get_f32(is);
  return signal::SpatioTemporalMap(static_cast<int>(t), static_cast<int>(s), static_cast<int>(c), fs,
                                   std::move(values));
}

void write_model(std::ostream& os, const learner::ModelParams& m) {
  write_header(os, kModel);
  put_le(os, static_cast<std::uint32_t>(m.arch.time_steps));
  put_le(os, static_cast<std::uint32_t>(m.arch.rows));
  put_le(os, static_cast<std::uint32_t>(m.arch.channels));
  put_le(os, static_cast<std::uint32_t>(m.arch.filters));
  put_le(os, static_cast<std::uint32_t>(m.arch.taps));
  put_le(os, static_cast<std::uint32_t>(m.arch.active_taps));
  put_le(os, static_cast<std::uint64_t>(m.theta.size()));
  for (double v : m.theta) put_f64(os, v);
}

learner::ModelParams read_model(std::istream& is) {
  expect_kind(is, kModel, "model");
  learner::ModelArch arch;
  arch.time_steps = static_cast<int>(get_le<std::uint32_t>(is));
  arch.rows = static_cast<int>(get_le<std::uint32_t>(is));
  arch.channels = static_cast<int>(get_le<std::uint32_t>(is));
  arch.filters = static_cast<int>(get_le<std::uint32_t>(is));
  arch.taps = static_cast<int>(get_le<std::uint32_t>(is));
  arch.active_taps = static_cast<int>(get_le<std::uint32_t>(is));
  const auto p = get_le<std::uint64_t>(is);
  if (p != arch.param_count()) throw IoError("model container: parameter count does not match arch");
  std::vector<double> theta(p);
  for (auto& v : theta) v = get_f64(is);
  learner::ModelParams m{arch, std::move(theta)};
  m.validate();
  return m;
}

void write_sample(std::ostream& os, const synth::SyntheticSample& s) {
  write_header(os, kSample);
  write_stmap(os, s.x);
  write_waveform(os, s.gt_signal);
  put_f64(os, s.gt_hr);
}

synth::SyntheticSample read_sample(std::istream& is) {
  expect_kind(is, kSample, "sample");
  auto x = read_stmap(is);
  auto gt = read_waveform(is);
  const double hr = get_f64(is);
  return synth::SyntheticSample{std::move(x), std::move(gt), hr};
}

namespace {

template <class Fn>
void save_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  fn(os);
  if (!os) throw IoError("write failed: " + path.string());
}

std::ifstream open_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open for reading: " + path.string());
  return is;
}

}  // namespace

void save_model(const std::filesystem::path& path, const learner::ModelParams& m) {
  save_file(path, [&](std::ostream& os) { write_model(os, m); });
}

learner::ModelParams load_model(const std::filesystem::path& path) {
  auto is = open_file(path);
  return read_model(is);
}

void save_sample(const std::filesystem::path& path, const synth::SyntheticSample& s) {
  save_file(path, [&](std::ostream& os) { write_sample(os, s); });
}

synth::SyntheticSample load_sample(const std::filesystem::path& path) {
  auto is = open_file(path);
  return read_sample(is);
}

std::string hash_hex(std::string_view bytes) {
  const std::uint64_t h = fnv1a64(bytes);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string file_hash_hex(const std::filesystem::path& path) {
  auto is = open_file(path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return hash_hex(ss.str());
}

nlohmann::json waveform_to_json(const signal::Waveform& w) {
  return {{"fs", w.fs}, {"length", w.samples.size()}, {"samples", w.samples}};
}

nlohmann::json stmap_to_json(const signal::SpatioTemporalMap& x) {
  return {{"shape", {x.time_steps(), x.rows(), x.channels()}},
          {"fs", x.fs()},
          {"values", x.values()}};
}

nlohmann::json dist_to_json(const vmf::GlobalDistState& s) {
  nlohmann::json j;
  j["n"] = s.n_total();
  if (s.initialized()) {
    j["mu"] = s.mu().components();
    j["kappa"] = s.kappa();
    j["r_bar"] = s.r_bar();
  } else {
    j["mu"] = nlohmann::json::array();
    j["kappa"] = 0.0;
    j["r_bar"] = 0.0;
  }
  j["accum"] = {{"mu_sum", s.mu_weighted_sum()}, {"r_sum", s.r_weighted_sum()}};
  return j;
}

vmf::GlobalDistState dist_from_json(const nlohmann::json& j) {
  const auto& accum = j.at("accum");
  return vmf::GlobalDistState::from_accumulators(accum.at("mu_sum").get<std::vector<double>>(),
                                                 accum.at("r_sum").get<double>(),
                                                 j.at("n").get<std::uint64_t>());
}

nlohmann::json batch_stats_to_json(const vmf::BatchStats& s) {
  return {{"mu", s.mu.components()}, {"r_bar", s.r_bar}, {"n", s.n}};
}

nlohmann::json client_report_to_json(const fed::ClientReport& r) {
  return {{"theta", r.theta.theta},
          {"s", r.s},
          {"stats", batch_stats_to_json(r.stats)}};
}

nlohmann::json broadcast_to_json(const fed::BroadcastPayload& p) {
  nlohmann::json j;
  j["theta"] = p.theta.theta;
  if (p.mu.has_value()) {
    j["mu"] = p.mu->components();
    j["kappa"] = *p.kappa;
  }
  return j;
}

nlohmann::json eval_result_to_json(const metrics::EvalResult& r) {
  return {{"mae", r.mae},     {"sd", r.sd},
          {"rmse", r.rmse},   {"pearson", r.pearson},
          {"pearson_degenerate", r.pearson_degenerate},
          {"n", r.n},         {"excluded", r.excluded}};
}

nlohmann::json tail_report_to_json(const metrics::TailReport& r) {
  auto interval = [](const metrics::TailReport::Interval& iv) {
    nlohmann::json j{{"lo", iv.lo}, {"hi", iv.hi}, {"n", iv.n}};
    if (iv.mae.has_value()) j["mae"] = *iv.mae;
    return j;
  };
  nlohmann::json j;
  j["tail_lo_edge"] = r.tail_lo_edge;
  j["tail_hi_edge"] = r.tail_hi_edge;
  j["low_tail"] = interval(r.low_tail);
  j["high_tail"] = interval(r.high_tail);
  j["intervals"] = nlohmann::json::array();
  for (const auto& iv : r.intervals) j["intervals"].push_back(interval(iv));
  return j;
}

nlohmann::json s_distribution_to_json(const metrics::SDistribution& d) {
  return {{"bin_edges", d.bin_edges}, {"counts", d.counts}, {"mean", d.mean}, {"median", d.median}};
}

nlohmann::json round_record_to_json(const fed::RoundRecord& r) {
  nlohmann::json j;
  j["round"] = r.round;
  j["clients"] = nlohmann::json::array();
  for (const auto& c : r.clients) {
    nlohmann::json cj;
    cj["id"] = c.id;
    cj["participated"] = c.participated;
    if (c.participated) {
      cj["s"] = c.log.s;
      cj["s_samples"] = c.log.s_samples;
      cj["s_skipped"] = c.log.s_skipped;
      cj["v_kl"] = {{"mean", c.log.v_kl_mean}, {"min", c.log.v_kl_min}, {"max", c.log.v_kl_max}};
      cj["loss"] = {{"bandwidth", c.log.mean_loss.bandwidth},
                    {"sparsity", c.log.mean_loss.sparsity},
                    {"variation", c.log.mean_loss.variation},
                    {"total", c.log.mean_loss.total}};
      cj["batches"] = c.log.batches;
      cj["skipped_batches"] = c.log.skipped_batches;
      cj["batch_d_kl"] = c.log.batch_d_kl;
      cj["r_bar"] = c.report_r_bar;
      cj["n"] = c.report_n;
    }
    j["clients"].push_back(std::move(cj));
  }
  j["weights"] = r.weights;
  j["skipped_folds"] = r.skipped_folds;
  j["dist"] = {{"kappa", r.dist_kappa}, {"r_bar", r.dist_r_bar}, {"n", r.dist_n}, {"mu", r.dist_mu}};
  if (std::isnan(r.sigma_used)) {
    j["sigma_used"] = nullptr;
  } else {
    j["sigma_used"] = r.sigma_used;
  }
  if (!r.eval_json.empty()) j["eval"] = nlohmann::json::parse(r.eval_json);
  return j;
}

}  // namespace fedhug::io
