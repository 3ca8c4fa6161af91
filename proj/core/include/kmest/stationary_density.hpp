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
#include <optional>
#include <vector>

#include "kmest/sde_model.hpp"

namespace kmest {

/// Stationary density of a 1-D SDE tabulated on a uniform grid.
///
/// Solves the zero-flux stationary Fokker-Planck equation
///   rho(x) ∝ D(x)^-2 exp( ∫ 2 A / D^2 ),
/// with the potential integral accumulated node to node by adaptive
/// quadrature. The table is normalized so its trapezoid integral is one.
/// Off-grid evaluation integrates from the nearest node, so pdf() and
/// pdf_d1() are smooth and exact up to quadrature error.
class TabulatedDensity {
 public:
  const Interval& support() const noexcept { return support_; }
  double step() const noexcept { return step_; }
  const std::vector<double>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double pdf(double x) const;
  double pdf_d1(double x) const;
  /// Trapezoid CDF at the nodes, linearly interpolated in between.
  double cdf(double x) const;

  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return variance_; }
  double stddev() const noexcept;

  DensityFunction as_function() const;

 private:
  friend TabulatedDensity stationary_density(const SdeModel&,
                                             std::optional<Interval>,
                                             std::size_t);
  explicit TabulatedDensity(SdeModel model) : model_(std::move(model)) {}

  static TabulatedDensity build(const SdeModel& model, Interval support,
                                std::size_t grid_n, bool require_decay);

  double log_pdf(double x) const;

  SdeModel model_;
  Interval support_;
  double step_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> potential_;  // ∫ 2A/D^2 from the reference node
  std::vector<double> values_;
  std::vector<double> cumulative_;
  double log_norm_ = 0.0;
  double mean_ = 0.0;
  double variance_ = 0.0;
};

/// Tabulates the stationary density on `support` with `grid_n` nodes.
///
/// Without a support, the density is first located on a wide window and
/// then re-tabulated on mean ± 6 stddev; in that mode a density that does
/// not decay inside the window is rejected as non-normalizable.
/// The support is clipped to the model's domain. Throws InvalidArgument if
/// D vanishes inside the support and NumericalError if the table cannot be
/// normalized.
TabulatedDensity stationary_density(const SdeModel& model,
                                    std::optional<Interval> support = std::nullopt,
                                    std::size_t grid_n = 4096);

}  // namespace kmest
