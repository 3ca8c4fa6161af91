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

#include "kmest/stationary_density.hpp"

#include <algorithm>
#include <memory>
#include <cmath>
#include <limits>
#include <sstream>

#include "kmest/error.hpp"
#include "kmest/quadrature.hpp"

namespace kmest {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kWindow = 50.0;
// Log-density drop required at an open window edge before the density
// counts as decaying.
constexpr double kDecayDrop = 30.0;
// Per-panel relative tolerance. Near a vanishing diffusion the integrand
// itself carries ~1e-13 relative cancellation error.
constexpr double kPanelTol = 1e-11;

double potential_rate(const SdeModel& model, double x) {
  const CoefficientJet j = model.jet(x);
  return 2.0 * j.a / (j.d * j.d);
}

bool on_domain_boundary(const SdeModel& model, double x) {
  return x == model.domain().lo || x == model.domain().hi;
}

Interval clip_to_domain(const SdeModel& model, Interval s) {
  s.lo = std::max(s.lo, model.domain().lo);
  s.hi = std::min(s.hi, model.domain().hi);
  if (!(s.lo < s.hi) || !std::isfinite(s.lo) || !std::isfinite(s.hi)) {
    std::ostringstream msg;
    msg << "stationary density support [" << s.lo << ", " << s.hi
        << "] is empty or unbounded after clipping to the model domain";
    throw InvalidArgument(msg.str());
  }
  return s;
}

}  // namespace

double TabulatedDensity::stddev() const noexcept { return std::sqrt(variance_); }

double TabulatedDensity::log_pdf(double x) const {
  if (!support_.contains(x)) return kNegInf;
  const double d = model_.diffusion(x);
  if (d == 0.0) return kNegInf;
  const auto last = static_cast<double>(nodes_.size() - 1);
  auto i = static_cast<std::size_t>(
      std::clamp(std::round((x - support_.lo) / step_), 0.0, last));
  if (!std::isfinite(potential_[i])) {
    i = (i == 0) ? 1 : i - 1;
  }
  const double phi =
      potential_[i] +
      integrate([this](double y) { return potential_rate(model_, y); }, nodes_[i], x,
                kPanelTol)
          .value;
  return phi - 2.0 * std::log(std::abs(d)) - log_norm_;
}

double TabulatedDensity::pdf(double x) const { return std::exp(log_pdf(x)); }

double TabulatedDensity::pdf_d1(double x) const {
  const double p = pdf(x);
  if (p == 0.0) return 0.0;
  const CoefficientJet j = model_.jet(x);
  // Zero flux: (D^2 rho)' = 2 A rho.
  return p * (2.0 * j.a - 2.0 * j.d * j.d1) / (j.d * j.d);
}

double TabulatedDensity::cdf(double x) const {
  if (x <= support_.lo) return 0.0;
  if (x >= support_.hi) return 1.0;
  const double pos = (x - support_.lo) / step_;
  const auto i = std::min(static_cast<std::size_t>(pos), nodes_.size() - 2);
  const double t = pos - static_cast<double>(i);
  return cumulative_[i] + t * (cumulative_[i + 1] - cumulative_[i]);
}

DensityFunction TabulatedDensity::as_function() const {
  auto self = std::make_shared<TabulatedDensity>(*this);
  return {[self](double x) { return self->pdf(x); },
          [self](double x) { return self->pdf_d1(x); }, support_};
}

TabulatedDensity stationary_density(const SdeModel& model,
                                    std::optional<Interval> support,
                                    std::size_t grid_n) {
  if (grid_n < 3) throw InvalidArgument("stationary density needs grid_n >= 3");
  if (support) {
    if (!(support->lo < support->hi)) {
      throw InvalidArgument("stationary density support must satisfy lo < hi");
    }
    return TabulatedDensity::build(model, clip_to_domain(model, *support), grid_n, false);
  }
  const Interval window = clip_to_domain(model, {-kWindow, kWindow});
  const TabulatedDensity coarse = TabulatedDensity::build(model, window, grid_n, true);
  const double mean = coarse.mean();
  const double sd = coarse.stddev();
  return TabulatedDensity::build(model, clip_to_domain(model, {mean - 6.0 * sd, mean + 6.0 * sd}),
                  grid_n, false);
}

TabulatedDensity TabulatedDensity::build(const SdeModel& model, Interval support,
                                         std::size_t grid_n, bool require_decay) {
  TabulatedDensity out(model);
  out.support_ = support;
  out.step_ = support.width() / static_cast<double>(grid_n - 1);
  out.nodes_.resize(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i) {
    out.nodes_[i] = support.lo + static_cast<double>(i) * out.step_;
  }
  out.nodes_.back() = support.hi;

  std::vector<double> log_rho(grid_n, kNegInf);
  std::vector<bool> dead(grid_n, false);
  for (std::size_t i = 0; i < grid_n; ++i) {
    const double x = out.nodes_[i];
    const double d = model.diffusion(x);
    if (!std::isfinite(d)) {
      throw NumericalError("diffusion is not finite on the density support");
    }
    if (d == 0.0) {
      const bool endpoint = (i == 0 || i + 1 == grid_n);
      if (!(endpoint && on_domain_boundary(model, x))) {
        std::ostringstream msg;
        msg << "diffusion vanishes at x = " << x << " inside the density support";
        throw InvalidArgument(msg.str());
      }
      dead[i] = true;
    }
  }

  // Accumulate the potential outward from the middle node.
  out.potential_.assign(grid_n, kNegInf);
  const std::size_t ref = grid_n / 2;
  if (dead[ref]) throw InvalidArgument("density support reference point has D = 0");
  out.potential_[ref] = 0.0;
  auto rate = [&model](double y) { return potential_rate(model, y); };
  for (std::size_t i = ref + 1; i < grid_n && !dead[i]; ++i) {
    out.potential_[i] =
        out.potential_[i - 1] + integrate(rate, out.nodes_[i - 1], out.nodes_[i], kPanelTol).value;
  }
  for (std::size_t i = ref; i-- > 0 && !dead[i];) {
    out.potential_[i] =
        out.potential_[i + 1] - integrate(rate, out.nodes_[i], out.nodes_[i + 1], kPanelTol).value;
  }

  double peak = kNegInf;
  for (std::size_t i = 0; i < grid_n; ++i) {
    if (dead[i]) continue;
    const double d = model.diffusion(out.nodes_[i]);
    log_rho[i] = out.potential_[i] - 2.0 * std::log(std::abs(d));
    if (std::isnan(log_rho[i])) throw NumericalError("stationary density is NaN");
    peak = std::max(peak, log_rho[i]);
  }
  if (!std::isfinite(peak)) throw NumericalError("stationary density is not finite");

  if (require_decay) {
    for (std::size_t i : {std::size_t{0}, grid_n - 1}) {
      if (dead[i]) continue;
      if (log_rho[i] - peak > -kDecayDrop) {
        std::ostringstream msg;
        msg << "stationary density of '" << model.name()
            << "' does not decay by x = " << out.nodes_[i]
            << "; the model is not normalizable";
        throw NumericalError(msg.str());
      }
    }
  }

  out.values_.resize(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i) out.values_[i] = std::exp(log_rho[i] - peak);
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < grid_n; ++i) {
    mass += 0.5 * (out.values_[i] + out.values_[i + 1]) *
            (out.nodes_[i + 1] - out.nodes_[i]);
  }
  if (!(mass > 0.0) || !std::isfinite(mass)) {
    throw NumericalError("stationary density cannot be normalized");
  }
  for (double& v : out.values_) v /= mass;
  out.log_norm_ = peak + std::log(mass);

  out.cumulative_.assign(grid_n, 0.0);
  double m1 = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i + 1 < grid_n; ++i) {
    const double h = out.nodes_[i + 1] - out.nodes_[i];
    const double f0 = out.values_[i];
    const double f1 = out.values_[i + 1];
    const double x0 = out.nodes_[i];
    const double x1 = out.nodes_[i + 1];
    out.cumulative_[i + 1] = out.cumulative_[i] + 0.5 * (f0 + f1) * h;
    m1 += 0.5 * (x0 * f0 + x1 * f1) * h;
    m2 += 0.5 * (x0 * x0 * f0 + x1 * x1 * f1) * h;
  }
  out.mean_ = m1;
  out.variance_ = std::max(m2 - m1 * m1, 0.0);
  return out;
}

}  // namespace kmest
