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

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fedhug {

/// Deterministic, hierarchically derivable random stream.
///
/// Every stream is identified by (master seed, tag, id). Child streams are
/// derived from the parent's key, so e.g. client 3's round-7 stream is
/// independent of client 2's and of how many other streams exist. All
/// distributions are hand-rolled on top of mt19937_64 so that results are
/// bit-identical across platforms and standard-library versions.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view tag, std::uint64_t id = 0);

  /// Child stream; drawing from the child never advances the parent.
  RngStream derive(std::string_view tag, std::uint64_t id = 0) const;

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (second deviate cached).
  double normal();

  /// Uniform integer in [lo, hi], inclusive, rejection-debiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Fisher-Yates shuffle driven by this stream.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  explicit RngStream(std::uint64_t key);

  std::uint64_t key_;
  std::mt19937_64 gen_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Stable 64-bit FNV-1a hash (used for config fingerprints and stream keys).
std::uint64_t fnv1a64(std::string_view s);

}  // namespace fedhug
