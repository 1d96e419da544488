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

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "fedhug/federation.hpp"
#include "fedhug/learner.hpp"
#include "fedhug/metrics.hpp"
#include "fedhug/signal.hpp"
#include "fedhug/synth.hpp"
#include "fedhug/vmf.hpp"

// Binary container format (all integers and doubles little-endian):
//   magic "FHUG" | u16 version=1 | u16 kind | kind-specific body
// kinds:
//   1 waveform : u64 length, f64 fs, length * f64
//   2 stmap    : u32 T, u32 S, u32 C, f64 fs, T*S*C * f32
//   3 model    : u32 time_steps, rows, channels, filters, taps, active_taps,
//                u64 P, P * f64
//   4 sample   : stmap record, waveform record, f64 gt_hr
namespace fedhug::io {

void write_waveform(std::ostream& os, const signal::Waveform& w);
signal::Waveform read_waveform(std::istream& is);

void write_stmap(std::ostream& os, const signal::SpatioTemporalMap& x);
signal::SpatioTemporalMap read_stmap(std::istream& is);

void write_model(std::ostream& os, const learner::ModelParams& m);
learner::ModelParams read_model(std::istream& is);

void write_sample(std::ostream& os, const synth::SyntheticSample& s);
synth::SyntheticSample read_sample(std::istream& is);

void save_model(const std::filesystem::path& path, const learner::ModelParams& m);
learner::ModelParams load_model(const std::filesystem::path& path);

void save_sample(const std::filesystem::path& path, const synth::SyntheticSample& s);
synth::SyntheticSample load_sample(const std::filesystem::path& path);

/// FNV-1a over a file's bytes, for manifest integrity entries.
std::string file_hash_hex(const std::filesystem::path& path);
std::string hash_hex(std::string_view bytes);

// Lossy JSON debug views.
nlohmann::json waveform_to_json(const signal::Waveform& w);
nlohmann::json stmap_to_json(const signal::SpatioTemporalMap& x);

// Wire/checkpoint JSON for the distribution state. The required fields are
// mu/kappa/r_bar/n; the accum block carries the exact fusion accumulators so
// a resumed run is bit-identical to an uninterrupted one.
nlohmann::json dist_to_json(const vmf::GlobalDistState& s);
vmf::GlobalDistState dist_from_json(const nlohmann::json& j);

nlohmann::json batch_stats_to_json(const vmf::BatchStats& s);

// Simulated wire payloads (also the round-checkpoint format).
nlohmann::json client_report_to_json(const fed::ClientReport& r);
nlohmann::json broadcast_to_json(const fed::BroadcastPayload& p);

nlohmann::json eval_result_to_json(const metrics::EvalResult& r);
nlohmann::json tail_report_to_json(const metrics::TailReport& r);
nlohmann::json s_distribution_to_json(const metrics::SDistribution& d);

nlohmann::json round_record_to_json(const fed::RoundRecord& r);

}  // namespace fedhug::io
