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

namespace fedhug::bessel {

// Evaluation strategy for the modified Bessel function of the first kind:
//   * argument below kAsymptoticCutoff(nu): ascending power series for
//     log I_nu (all-positive terms, internally rescaled so partial sums
//     never overflow), Gauss continued fraction (modified Lentz) for the
//     ratio I_nu/I_{nu-1};
//   * argument above the cutoff: uniform large-argument expansion with the
//     exp(x) factor kept in log space, so log I_nu stays finite up to
//     x ~ 1e9 and the ratio is a quotient of two short polynomial tails.
// The cutoff max(64, 4*nu^2) keeps both branches at <= ~1e-12 relative
// error where they meet.

/// Switchover point between series/continued-fraction and asymptotic code.
double asymptotic_cutoff(double nu);

/// I_nu(x) / I_{nu-1}(x) for nu >= 0.5, x >= 0. Relative error < 1e-10.
double ratio_i(double nu, double x);

/// log I_nu(x) for nu >= 0, x > 0. No overflow for x up to ~1e9.
double log_i(double nu, double x);

}  // namespace fedhug::bessel
