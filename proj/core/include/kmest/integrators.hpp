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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kmest/bin_grid.hpp"
#include "kmest/rng.hpp"
#include "kmest/sde_model.hpp"
#include "kmest/stochastic_integrals.hpp"

namespace kmest {

enum class Scheme { kEuler, kMilstein, kStrong15 };

std::string_view to_string(Scheme scheme) noexcept;
Scheme parse_scheme(std::string_view name);

struct SimulationConfig {
  Scheme scheme = Scheme::kStrong15;
  double dt_int = 5e-4;
  /// Simulated time discarded before the first pair; defaults to ten
  /// correlation times of the model.
  std::optional<double> burn_in;
  std::uint64_t seed = 0;
  double x0 = 0.0;
  /// Collection-phase step budget for fixed-per-bin stopping.
  std::uint64_t max_steps = 4'000'000'000ULL;
  /// |x| beyond this aborts the trajectory with DivergenceError.
  double divergence_bound = 1e6;

  double resolved_burn_in(const SdeModel& model) const {
    return burn_in.value_or(10.0 * model.correlation_time());
  }
};

/// One step of the chosen scheme from x using the step's integrals:
///   euler     x + B0 I0 + B1 I1
///   milstein  euler + B2 I11
///   strong15  x + sum_q B_q I_{alpha_q} (all seven terms)
double step(const SdeModel& model, double x, const MultipleIntegrals& integrals,
            Scheme scheme);

struct TransitionPair {
  double x_start = 0.0;
  double x_end = 0.0;

  friend bool operator==(const TransitionPair&, const TransitionPair&) = default;
};

struct TransitionPairSet {
  std::vector<TransitionPair> pairs;
  double dt_obs = 0.0;
  double dt_int = 0.0;
  Scheme scheme = Scheme::kStrong15;
  std::string model_name;
  std::uint64_t seed = 0;
  /// Integration steps spent after burn-in.
  std::uint64_t steps = 0;
  double burn_in_seconds = 0.0;
  double collection_seconds = 0.0;
  /// Fixed-per-bin only: collection time at which each grid (primary first,
  /// then `also`) reached its quota.
  std::vector<double> fill_seconds;
  std::vector<std::uint64_t> fill_steps;
};

struct FixedCount {
  std::size_t count = 0;
};

/// Stop as soon as every bin of `grid` (and of every grid in `also`) holds
/// at least `per_bin` pair starts.
struct FixedPerBin {
  std::size_t per_bin = 0;
  BinGrid grid;
  /// Unless set, only pairs starting on some grid are kept.
  bool keep_off_grid = false;
  std::vector<BinGrid> also{};
};

using StopRule = std::variant<FixedCount, FixedPerBin>;

/// Simulates a stationary trajectory and cuts it into consecutive transition
/// pairs (X_t, X_{t+dt_obs}) with stride dt_obs, starting after burn-in.
/// dt_obs must be an integer multiple of sim.dt_int.
TransitionPairSet generate_pairs(const SdeModel& model, const SimulationConfig& sim,
                                 double dt_obs, const StopRule& stop);

/// n samples of the stationary trajectory spaced dt_obs apart (after burn-in).
std::vector<double> simulate_series(const SdeModel& model, const SimulationConfig& sim,
                                    double dt_obs, std::size_t n);

/// Combines consecutive fine-step noises of length fine_dt into the noise of
/// the enclosing coarse step.
StepNoise aggregate_noise(std::span<const StepNoise> fine, double fine_dt) noexcept;

struct StrongOrderResult {
  std::vector<double> dts;
  /// Root-mean-square endpoint error against the reference path.
  std::vector<double> errors;
  double slope = 0.0;
};

/// Strong-error sweep: every coarse path is driven by the aggregated noise of
/// a strong15 reference path with step fine_dt. Each entry of `dts` must be
/// an integer multiple of fine_dt, and horizon a multiple of every dt.
StrongOrderResult measure_strong_order(const SdeModel& model, Scheme scheme,
                                       const std::vector<double>& dts, double fine_dt,
                                       double horizon, double x0, std::size_t paths,
                                       std::uint64_t seed);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace kmest
