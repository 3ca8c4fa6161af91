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

#include <array>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kmest {

/// Drift A, diffusion D and their first two derivatives at one point.
struct CoefficientJet {
  double a = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double d = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  double width() const noexcept { return hi - lo; }
};

/// A normalized density together with its derivative.
struct DensityFunction {
  std::function<double(double)> pdf;
  std::function<double(double)> pdf_d1;
  Interval support;
};

/// One-dimensional time-homogeneous Ito SDE  dX = A(X) dt + D(X) dW.
///
/// Immutable value type; all coefficient evaluation goes through a single
/// jet callback so integrators pay one indirect call per step.
class SdeModel {
 public:
  using JetFn = std::function<CoefficientJet(double)>;

  SdeModel(std::string name, JetFn jet, Interval domain = {},
           double correlation_time = 1.0,
           std::optional<DensityFunction> density = std::nullopt);

  CoefficientJet jet(double x) const { return jet_(x); }

  double drift(double x) const { return jet_(x).a; }
  double drift_d1(double x) const { return jet_(x).a1; }
  double drift_d2(double x) const { return jet_(x).a2; }
  double diffusion(double x) const { return jet_(x).d; }
  double diffusion_d1(double x) const { return jet_(x).d1; }
  double diffusion_d2(double x) const { return jet_(x).d2; }
  double diffusion_squared(double x) const {
    const double d = jet_(x).d;
    return d * d;
  }

  const std::string& name() const noexcept { return name_; }

  /// Open state-space interval on which D > 0 (the whole line unless the
  /// diffusion has a root).
  const Interval& domain() const noexcept { return domain_; }

  /// Rough autocorrelation time, used to size the default burn-in.
  double correlation_time() const noexcept { return correlation_time_; }

  /// Closed-form stationary density, when one is known.
  const std::optional<DensityFunction>& stationary_density() const noexcept {
    return density_;
  }

 private:
  std::string name_;
  JetFn jet_;
  Interval domain_;
  double correlation_time_;
  std::optional<DensityFunction> density_;
};

/// Coefficients B_0..B_6 of the order-1.5 Ito-Taylor expansion, multiplying
/// I_(0), I_(1), I_(1,1), I_(0,1), I_(1,0), I_(0,0), I_(1,1,1) respectively.
using ItoTaylorCoefficients = std::array<double, 7>;

ItoTaylorCoefficients ito_taylor_coefficients(const CoefficientJet& jet) noexcept;

inline ItoTaylorCoefficients ito_taylor_coefficients(const SdeModel& model,
                                                     double x) {
  return ito_taylor_coefficients(model.jet(x));
}

using ParamMap = std::map<std::string, double, std::less<>>;

/// Names accepted by builtin_model().
std::vector<std::string> builtin_model_names();

/// Parameter values used in the reference experiments for `name`.
ParamMap default_params(std::string_view name);

/// Built-in models:
///   cubic              A = -gamma x^3,             D = sigma1 + sigma2 x
///   dw_additive        A = -gamma x (x^2 - b0),    D = sigma
///   dw_multiplicative  A = -gamma x (x^2 - b0),    D = sigma1 + sigma2 x^2
///   ou                 A = -theta x,               D = sigma
/// `params` must name every parameter of the model and nothing else.
SdeModel builtin_model(std::string_view name, const ParamMap& params);

}  // namespace kmest
