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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kmest/binning.hpp"
#include "kmest/integrators.hpp"
#include "kmest/sde_model.hpp"

namespace kmest {

/// Sampling regimes:
///   mdt_const   explicit (M, dt) list, typically with M dt held fixed
///   mdt_inf     one dt, a list of M
///   dxdt_sweep  a list of dt at one M
enum class Regime { kMdtConst, kMdtInf, kDxDtSweep };

std::string_view to_string(Regime regime) noexcept;
Regime parse_regime(std::string_view name);

struct ExperimentCell {
  std::size_t m = 0;
  double dt_obs = 0.0;
  std::size_t nb = 0;
  double dx = 0.0;
};

struct ExperimentConfig {
  std::string model = "cubic";
  /// Empty means the model's reference parameters.
  ParamMap params;
  /// Used instead of the named built-in when set (library use only).
  std::shared_ptr<const SdeModel> custom_model;

  /// Bins tile [-half_width, half_width]; one cell per entry of nb_list.
  double half_width = 0.5;
  std::vector<std::size_t> nb_list{10};

  Regime regime = Regime::kMdtConst;
  std::vector<std::pair<std::size_t, double>> m_dt;  // mdt_const
  double dt = 0.01;                                  // mdt_inf
  std::vector<std::size_t> m_list;                   // mdt_inf
  std::vector<double> dt_list;                       // dxdt_sweep
  std::size_t m = 500;                               // dxdt_sweep

  std::size_t mc = 100;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::kStrong15;
  double dt_int = 5e-4;
  std::optional<double> burn_in;
  double x0 = 0.0;
  /// Per-realization collection budget in integration steps.
  std::uint64_t max_steps = 2'000'000'000ULL;
  std::size_t workers = 1;
  /// Cells with equal (M, dt) whose bin counts all divide the largest one
  /// are served by one trajectory per realization; each coarser grid uses
  /// the first M pairs of each of its bins.
  bool share_trajectories = true;
  /// Diverged realizations are dropped; more than this fraction is an error.
  double max_excluded_fraction = 0.01;
};

/// Cells in regime order, then nb_list order. Validates the config.
std::vector<ExperimentCell> expand_cells(const ExperimentConfig& config);

SdeModel resolve_model(const ExperimentConfig& config);

/// Per-realization error terms of one estimate against the true
/// coefficients at the bin centers, averaged over the grid interval:
///   sum_k (A_k - A(x_k))^2 dx / (2L)    and likewise for D^2.
std::pair<double, double> mse_terms(const BinnedEstimate& estimate, const SdeModel& model);

struct CellReport {
  ExperimentCell cell;
  double mse_drift = 0.0;
  double se_drift = 0.0;
  double mse_diff = 0.0;
  double se_diff = 0.0;
  /// Wall time to generate the cell's data, summed over realizations
  /// (burn-in plus collection until this cell's grid was filled).
  double gen_seconds = 0.0;
  std::uint64_t steps = 0;
  std::size_t realizations = 0;
  std::size_t excluded = 0;
  /// Per-realization terms in realization order; NaN for excluded ones.
  std::vector<double> drift_terms;
  std::vector<double> diff_terms;
};

struct MSEReport {
  ExperimentConfig config;
  std::vector<CellReport> cells;
};

/// Monte-Carlo MSE for every cell. Deterministic given the config and
/// independent of `workers`. Throws StarvationError naming the cell when a
/// realization cannot fill its grid, DivergenceError when too many
/// realizations diverge.
MSEReport run_mse(const ExperimentConfig& config);

/// Regenerates the trajectory behind realization r of `cell`.
TransitionPairSet realization_pairs(const ExperimentConfig& config,
                                    const ExperimentCell& cell, std::size_t r);

struct DoublingCell {
  ExperimentCell cell;  // at M1
  double drift_ratio = 0.0;
  double diff_ratio = 0.0;
  /// Ratio undefined because the M2 error is zero.
  bool drift_degenerate = false;
  bool diff_degenerate = false;
};

struct DoublingReport {
  MSEReport at_m1;
  MSEReport at_m2;
  std::vector<DoublingCell> cells;
};

/// MSE(M1) / MSE(M2) per cell of a dxdt_sweep config. Requires m2 == 2 m1.
DoublingReport run_m_doubling(const ExperimentConfig& config, std::size_t m1,
                              std::size_t m2);

struct TimingEntry {
  ExperimentCell cell;
  double gen_seconds = 0.0;
  std::uint64_t steps = 0;
};

/// Data-generation wall time per cell.
std::vector<TimingEntry> timing_report(const ExperimentConfig& config);

}  // namespace kmest
