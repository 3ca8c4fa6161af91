// Copyright 2026 The kmest Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kmest/rng.hpp"

namespace kmest {

/// Brownian increment and its time integral over one step of length dt.
struct StepNoise {
  double dw = 0.0;  // I_(1), variance dt
  double dz = 0.0;  // I_(1,0), variance dt^3/3
};

/// Multiple Ito integrals over one step, indexed by their multi-index.
struct MultipleIntegrals {
  double i0 = 0.0;    // I_(0)      = dt
  double i1 = 0.0;    // I_(1)      = dW
  double i00 = 0.0;   // I_(0,0)    = dt^2 / 2
  double i10 = 0.0;   // I_(1,0)    = dZ
  double i01 = 0.0;   // I_(0,1)    = dW dt - dZ
  double i11 = 0.0;   // I_(1,1)    = (dW^2 - dt) / 2
  double i111 = 0.0;  // I_(1,1,1)  = (dW^3 - 3 dt dW) / 6
};

/// Builds (dW, dZ) from two independent standard normals.
StepNoise step_noise_from_normals(double dt, double u1, double u2) noexcept;

/// Jointly Gaussian (dW, dZ) with Var dW = dt, Var dZ = dt^3/3,
/// Cov = dt^2/2. Consumes two normals from `rng` (u1 first).
StepNoise sample_step_noise(double dt, Rng& rng);

MultipleIntegrals derive_multiple_integrals(const StepNoise& noise, double dt) noexcept;

enum class IntegralId { k0, k1, k00, k10, k01, k11, k111 };

std::string_view to_string(IntegralId id) noexcept;

/// Number of Brownian (index 1) entries in the multi-index.
int count_ones(IntegralId id) noexcept;

/// A monomial in the step integrals, e.g. I1^2 * I11.
struct MomentSpec {
  std::vector<std::pair<IntegralId, int>> factors;

  /// Parses "I1^2*I11", "I01^2", "I1*I11" (factor names: I0, I1, I00,
  /// I10, I01, I11, I111). Throws InvalidArgument on malformed input.
  static MomentSpec parse(std::string_view text);
  std::string to_string() const;
  /// Total count of Brownian indices, counted with multiplicity.
  int total_ones() const noexcept;
  double evaluate(const MultipleIntegrals& integrals) const noexcept;
};

struct MomentEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Monte-Carlo estimate of E[spec] over n sampled steps of length dt.
/// Requires n >= 1000 and a non-empty spec.
MomentEstimate estimate_moment(const MomentSpec& spec, double dt, std::size_t n,
                               Rng& rng);

/// Several moments over one shared set of sampled steps.
std::vector<MomentEstimate> estimate_moments(const std::vector<MomentSpec>& specs,
                                             double dt, std::size_t n, Rng& rng);

}  // namespace kmest
