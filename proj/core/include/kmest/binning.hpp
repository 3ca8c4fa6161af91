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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "kmest/bin_grid.hpp"
#include "kmest/integrators.hpp"
#include "kmest/sde_model.hpp"

namespace kmest {

/// Per-bin conditional-moment estimates. A bin with count 0 is empty and its
/// values are absent rather than zero.
struct BinnedEstimate {
  /// All bins empty.
  BinnedEstimate(BinGrid g, double dt)
      : grid(g),
        dt_obs(dt),
        counts(g.size(), 0),
        drift_hat(g.size(), 0.0),
        diff2_hat(g.size(), 0.0),
        drift_stderr(g.size(), 0.0),
        diff2_stderr(g.size(), 0.0) {}

  BinGrid grid;
  double dt_obs = 0.0;
  std::vector<std::size_t> counts;
  std::vector<double> drift_hat;
  std::vector<double> diff2_hat;
  /// Standard errors from the within-bin sample variance.
  std::vector<double> drift_stderr;
  std::vector<double> diff2_stderr;
  /// False for the centered estimator, which only fills the drift.
  bool has_diffusion = true;

  bool empty(std::size_t k) const noexcept { return counts[k] == 0; }
  std::optional<double> drift(std::size_t k) const {
    return empty(k) ? std::nullopt : std::optional<double>(drift_hat[k]);
  }
  std::optional<double> diff2(std::size_t k) const {
    return empty(k) || !has_diffusion ? std::nullopt
                                      : std::optional<double>(diff2_hat[k]);
  }
  std::size_t non_empty_bins() const noexcept;
};

struct EstimateOptions {
  /// Fixed-M mode: only the first `per_bin_cap` pairs (in pair order) of
  /// each bin are used.
  std::optional<std::size_t> per_bin_cap;
};

/// Drift and diffusion-squared estimators from increments conditioned on the
/// bin of the pair start:
///   A_k  = sum (x_end - x_start)   / (M_k dt)
///   D2_k = sum (x_end - x_start)^2 / (M_k dt)
/// Within a bin the terms are summed in sorted order with compensation, so
/// the result does not depend on pair order. Throws InvalidArgument when
/// every bin is empty or dt_obs <= 0.
BinnedEstimate estimate(const TransitionPairSet& pairs, const BinGrid& grid,
                        const EstimateOptions& options = {});

BinnedEstimate estimate(std::span<const TransitionPair> pairs, double dt_obs,
                        const BinGrid& grid, const EstimateOptions& options = {});

/// Drift estimator centered at the bin center: sum (x_end - x_k) / (M_k dt).
BinnedEstimate estimate_centered(const TransitionPairSet& pairs, const BinGrid& grid,
                                 const EstimateOptions& options = {});

BinnedEstimate estimate_centered(std::span<const TransitionPair> pairs, double dt_obs,
                                 const BinGrid& grid, const EstimateOptions& options = {});

/// Expectation of f under the density truncated to `bin` and renormalized.
/// Throws NumericalError if the density has no mass on the bin.
double truncated_expectation(const std::function<double(double)>& f,
                             const DensityFunction& density, Interval bin);

struct SmoothFunction {
  std::function<double(double)> f;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
};

struct ExpansionCheck {
  double quadrature = 0.0;
  double prediction = 0.0;
  double residual = 0.0;
};

/// Compares the truncated expectation with its small-bin expansion
///   f(x_k) + (2 f' rho' + f'' rho) / rho * dx^2 / 24,
/// whose remainder is O(dx^4).
ExpansionCheck expansion_check(const SmoothFunction& f, const DensityFunction& density,
                               Interval bin);

}  // namespace kmest
