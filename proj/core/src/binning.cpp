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

#include "kmest/binning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kmest/error.hpp"
#include "kmest/quadrature.hpp"

namespace kmest {

BinGrid::BinGrid(double lo, double hi, std::size_t nb)
    : interval_{lo, hi}, nb_(nb), width_(0.0) {
  if (nb == 0) throw InvalidArgument("bin grid needs at least one bin");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw InvalidArgument("bin grid interval must be finite with lo < hi");
  }
  width_ = (hi - lo) / static_cast<double>(nb);
}

std::vector<double> BinGrid::centers() const {
  std::vector<double> c(nb_);
  for (std::size_t k = 0; k < nb_; ++k) c[k] = center(k);
  return c;
}

BinGrid make_grid(double half_width, std::size_t nb) {
  if (!(half_width > 0.0)) throw InvalidArgument("grid half-width L must be > 0");
  return BinGrid(-half_width, half_width, nb);
}

BinGrid make_grid(Interval interval, std::size_t nb) {
  return BinGrid(interval.lo, interval.hi, nb);
}

std::size_t BinnedEstimate::non_empty_bins() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

namespace {

// Neumaier-compensated sum of values sorted ascending.
double sorted_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

// Increments grouped by the bin of their start point.
std::vector<std::vector<double>> bucket(std::span<const TransitionPair> pairs,
                                        const BinGrid& grid, const EstimateOptions& options,
                                        bool centered) {
  std::vector<std::vector<double>> buckets(grid.size());
  for (const TransitionPair& p : pairs) {
    const auto k = grid.assign(p.x_start);
    if (!k) continue;
    auto& b = buckets[*k];
    if (options.per_bin_cap && b.size() >= *options.per_bin_cap) continue;
    b.push_back(p.x_end - (centered ? grid.center(*k) : p.x_start));
  }
  return buckets;
}

void validate(double dt_obs, const EstimateOptions& options) {
  if (!(dt_obs > 0.0)) throw InvalidArgument("estimation needs dt_obs > 0");
  if (options.per_bin_cap && *options.per_bin_cap == 0) {
    throw InvalidArgument("per-bin cap must be >= 1");
  }
}

BinnedEstimate fold(std::vector<std::vector<double>> buckets, double dt_obs,
                    const BinGrid& grid, bool with_diffusion) {
  BinnedEstimate out(grid, dt_obs);
  const std::size_t nb = grid.size();
  out.has_diffusion = with_diffusion;
  for (std::size_t k = 0; k < nb; ++k) {
    auto& inc = buckets[k];
    const std::size_t m = inc.size();
    out.counts[k] = m;
    if (m == 0) continue;
    const double mm = static_cast<double>(m);
    std::vector<double> sq(m);
    for (std::size_t i = 0; i < m; ++i) sq[i] = inc[i] * inc[i];
    const double s1 = sorted_sum(inc);
    const double s2 = sorted_sum(sq);
    out.drift_hat[k] = s1 / (mm * dt_obs);
    if (m > 1) {
      const double mean = s1 / mm;
      const double var1 = std::max(s2 / mm - mean * mean, 0.0) * mm / (mm - 1.0);
      out.drift_stderr[k] = std::sqrt(var1 / mm) / dt_obs;
    }
    if (with_diffusion) {
      out.diff2_hat[k] = s2 / (mm * dt_obs);
      if (m > 1) {
        std::vector<double> quad(m);
        for (std::size_t i = 0; i < m; ++i) quad[i] = sq[i] * sq[i];
        const double mean2 = s2 / mm;
        const double s4 = sorted_sum(quad);
        const double var2 = std::max(s4 / mm - mean2 * mean2, 0.0) * mm / (mm - 1.0);
        out.diff2_stderr[k] = std::sqrt(var2 / mm) / dt_obs;
      }
    }
  }
  if (out.non_empty_bins() == 0) {
    throw InvalidArgument("no transition pair starts inside the bin grid");
  }
  return out;
}

}  // namespace

BinnedEstimate estimate(std::span<const TransitionPair> pairs, double dt_obs,
                        const BinGrid& grid, const EstimateOptions& options) {
  validate(dt_obs, options);
  return fold(bucket(pairs, grid, options, false), dt_obs, grid, true);
}

BinnedEstimate estimate(const TransitionPairSet& pairs, const BinGrid& grid,
                        const EstimateOptions& options) {
  return estimate(pairs.pairs, pairs.dt_obs, grid, options);
}

BinnedEstimate estimate_centered(std::span<const TransitionPair> pairs, double dt_obs,
                                 const BinGrid& grid, const EstimateOptions& options) {
  validate(dt_obs, options);
  return fold(bucket(pairs, grid, options, true), dt_obs, grid, false);
}

BinnedEstimate estimate_centered(const TransitionPairSet& pairs, const BinGrid& grid,
                                 const EstimateOptions& options) {
  return estimate_centered(pairs.pairs, pairs.dt_obs, grid, options);
}

double truncated_expectation(const std::function<double(double)>& f,
                             const DensityFunction& density, Interval bin) {
  if (!(bin.lo < bin.hi)) throw InvalidArgument("bin must satisfy lo < hi");
  const double mass = integrate(density.pdf, bin.lo, bin.hi, 1e-13).value;
  if (!(mass > 0.0)) {
    std::ostringstream msg;
    msg << "density has no mass on [" << bin.lo << ", " << bin.hi << "]";
    throw NumericalError(msg.str());
  }
  const double weighted =
      integrate([&](double x) { return f(x) * density.pdf(x); }, bin.lo, bin.hi, 1e-13)
          .value;
  return weighted / mass;
}

ExpansionCheck expansion_check(const SmoothFunction& f, const DensityFunction& density,
                               Interval bin) {
  ExpansionCheck out;
  out.quadrature = truncated_expectation(f.f, density, bin);
  const double xk = 0.5 * (bin.lo + bin.hi);
  const double dx = bin.width();
  const double rho = density.pdf(xk);
  const double rho1 = density.pdf_d1(xk);
  out.prediction =
      f.f(xk) + (2.0 * f.d1(xk) * rho1 + f.d2(xk) * rho) / rho * dx * dx / 24.0;
  out.residual = std::abs(out.quadrature - out.prediction);
  return out;
}

}  // namespace kmest
