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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kmest/binning.hpp"
#include "kmest/sde_model.hpp"

namespace kmest {

enum class FitKind { kOls, kRidge, kLasso };

std::string_view to_string(FitKind kind) noexcept;
FitKind parse_fit_kind(std::string_view name);

struct FitMethod {
  FitKind kind = FitKind::kLasso;
  /// Penalty weight. Required for ridge; for lasso, absent means "choose by
  /// cross-validation".
  std::optional<double> lambda;
};

struct FitPoint {
  double x = 0.0;
  double y = 0.0;
  double weight = 1.0;
};

struct FitOptions {
  int degree = 7;
  FitMethod method;
  std::size_t cv_folds = 5;
  std::size_t cv_grid_size = 25;
  /// Coordinate-descent stop: largest standardized coefficient change.
  double tolerance = 1e-8;
  std::size_t max_sweeps = 100000;
};

struct FitDiagnostics {
  /// Weighted residual sum of squares on the original scale.
  double rss = 0.0;
  std::size_t iterations = 0;
  std::size_t points_used = 0;
  bool lambda_from_cv = false;
  std::vector<double> cv_lambdas;
  std::vector<double> cv_errors;
  /// Largest KKT violation of the returned lasso solution (standardized).
  double kkt_violation = 0.0;
};

/// Polynomial c_0 + c_1 x + ... + c_degree x^degree.
///
/// Fitting works on weight-normalized, centered and scaled power columns
/// with an unpenalized intercept; coefficients are mapped back to the raw
/// power basis. Penalized objectives (standardized units, weights summing
/// to one):
///   ridge  1/2 sum w (y - Z b)^2 + lambda/2 |b|_2^2
///   lasso  1/2 sum w (y - Z b)^2 + lambda   |b|_1
struct PolynomialFit {
  int degree = 0;
  std::vector<double> coefficients;
  FitMethod method;
  FitDiagnostics diagnostics;

  double operator()(double x) const noexcept;
};

/// Throws InvalidArgument for too few positive-weight points or repeated x,
/// NumericalError for a rank-deficient OLS design and ConvergenceError when
/// lasso does not converge within max_sweeps.
PolynomialFit fit(std::span<const FitPoint> points, const FitOptions& options);

/// Standardized design used by fit(); exposed for optimality checks.
struct StandardizedDesign {
  std::vector<double> column_mean;   // per power 1..degree
  std::vector<double> column_scale;  // per power 1..degree
  double y_mean = 0.0;
  /// Gram matrix Z^T W Z (row-major, degree x degree) and Z^T W y.
  std::vector<double> gram;
  std::vector<double> moment;
};

StandardizedDesign standardize(std::span<const FitPoint> points, int degree);

/// Maps raw-basis coefficients to standardized slopes (c_1..c_degree scaled).
std::vector<double> to_standardized(const PolynomialFit& fit,
                                    const StandardizedDesign& design);

/// Polynomial forms of the built-in models' drift and squared diffusion.
struct PolynomialTruth {
  std::vector<double> drift;
  std::vector<double> diff2;
};

std::optional<PolynomialTruth> polynomial_truth(std::string_view model,
                                                const ParamMap& params);

struct PipelineOptions {
  FitOptions fit;
  /// Bins with fewer pairs are dropped before fitting.
  std::size_t min_count = 200;
  /// Minimum usable bins; defaults to degree + 1.
  std::optional<std::size_t> min_bins;
};

struct PipelineResult {
  PolynomialFit drift;
  PolynomialFit diff2;
  std::vector<double> drift_abs_error;
  std::vector<double> diff2_abs_error;
};

/// Fits polynomials to the drift and diffusion-squared estimates, weighting
/// each bin by its count. Throws InvalidArgument("too few usable bins ...")
/// when fewer than min_bins bins survive the count threshold.
PipelineResult fit_pipeline(const BinnedEstimate& estimate,
                            const std::optional<PolynomialTruth>& truth,
                            const PipelineOptions& options);

}  // namespace kmest
