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

#include "kmest/integrators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kmest/error.hpp"

namespace kmest {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t steps_per(double span, double dt, const char* what) {
  const double ratio = span / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << what << " (" << span << ") is not an integer multiple of the step " << dt;
    throw InvalidArgument(msg.str());
  }
  return static_cast<std::uint64_t>(rounded);
}

class Stepper {
 public:
  Stepper(const SdeModel& model, const SimulationConfig& sim, Rng& rng)
      : model_(model), sim_(sim), rng_(rng) {}

  double advance(double x) {
    const MultipleIntegrals m =
        derive_multiple_integrals(sample_step_noise(sim_.dt_int, rng_), sim_.dt_int);
    const double next = step(model_, x, m, sim_.scheme);
    ++taken_;
    if (!(std::abs(next) <= sim_.divergence_bound)) {
      std::ostringstream msg;
      msg << "trajectory of '" << model_.name() << "' diverged (x = " << next
          << ") at step " << taken_;
      throw DivergenceError(msg.str(), static_cast<double>(taken_) * sim_.dt_int);
    }
    return next;
  }

  double advance(double x, std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) x = advance(x);
    return x;
  }

  std::uint64_t taken() const noexcept { return taken_; }

 private:
  const SdeModel& model_;
  const SimulationConfig& sim_;
  Rng& rng_;
  std::uint64_t taken_ = 0;
};

void validate(const SimulationConfig& sim, double dt_obs) {
  if (!(sim.dt_int > 0.0)) throw InvalidArgument("integration step must be > 0");
  if (!(dt_obs > 0.0)) throw InvalidArgument("observation step must be > 0");
  if (sim.burn_in && *sim.burn_in < 0.0) throw InvalidArgument("burn-in must be >= 0");
  if (!std::isfinite(sim.x0)) throw InvalidArgument("initial state must be finite");
}

}  // namespace

std::string_view to_string(Scheme scheme) noexcept {
  switch (scheme) {
    case Scheme::kEuler: return "euler";
    case Scheme::kMilstein: return "milstein";
    case Scheme::kStrong15: return "strong15";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "euler") return Scheme::kEuler;
  if (name == "milstein") return Scheme::kMilstein;
  if (name == "strong15") return Scheme::kStrong15;
  throw InvalidArgument("unknown scheme '" + std::string(name) +
                        "' (expected euler, milstein or strong15)");
}

double step(const SdeModel& model, double x, const MultipleIntegrals& m,
            Scheme scheme) {
  const CoefficientJet j = model.jet(x);
  double next = x + j.a * m.i0 + j.d * m.i1;
  if (scheme == Scheme::kEuler) return next;
  next += j.d * j.d1 * m.i11;
  if (scheme == Scheme::kMilstein) return next;
  const ItoTaylorCoefficients b = ito_taylor_coefficients(j);
  return next + b[3] * m.i01 + b[4] * m.i10 + b[5] * m.i00 + b[6] * m.i111;
}

TransitionPairSet generate_pairs(const SdeModel& model, const SimulationConfig& sim,
                                 double dt_obs, const StopRule& stop) {
  validate(sim, dt_obs);
  const std::uint64_t stride = steps_per(dt_obs, sim.dt_int, "observation step");
  const double burn_in = sim.resolved_burn_in(model);
  const auto burn_steps = static_cast<std::uint64_t>(std::ceil(burn_in / sim.dt_int - 1e-9));

  TransitionPairSet out;
  out.dt_obs = dt_obs;
  out.dt_int = sim.dt_int;
  out.scheme = sim.scheme;
  out.model_name = model.name();
  out.seed = sim.seed;

  Rng rng(sim.seed);
  Stepper stepper(model, sim, rng);

  auto t0 = Clock::now();
  double x = stepper.advance(sim.x0, burn_steps);
  out.burn_in_seconds = seconds_since(t0);

  t0 = Clock::now();
  if (const auto* fixed = std::get_if<FixedCount>(&stop)) {
    out.pairs.reserve(fixed->count);
    for (std::size_t i = 0; i < fixed->count; ++i) {
      const double next = stepper.advance(x, stride);
      out.pairs.push_back({x, next});
      x = next;
    }
  } else {
    const auto& rule = std::get<FixedPerBin>(stop);
    if (rule.per_bin == 0) throw InvalidArgument("per-bin quota must be >= 1");
    std::vector<const BinGrid*> grids{&rule.grid};
    for (const BinGrid& g : rule.also) grids.push_back(&g);
    std::vector<std::vector<std::size_t>> counts;
    std::vector<std::size_t> unfilled;
    std::size_t open_grids = grids.size();
    for (const BinGrid* g : grids) {
      counts.emplace_back(g->size(), 0);
      unfilled.push_back(g->size());
    }
    out.fill_seconds.assign(grids.size(), 0.0);
    out.fill_steps.assign(grids.size(), 0);
    const std::uint64_t budget_start = stepper.taken();
    while (open_grids > 0) {
      if (stepper.taken() - budget_start + stride > sim.max_steps) {
        const std::size_t g =
            static_cast<std::size_t>(std::find_if(unfilled.begin(), unfilled.end(),
                                                  [](std::size_t u) { return u > 0; }) -
                                     unfilled.begin());
        std::vector<std::size_t> bins;
        std::vector<std::size_t> have;
        for (std::size_t k = 0; k < counts[g].size(); ++k) {
          if (counts[g][k] < rule.per_bin) {
            bins.push_back(k);
            have.push_back(counts[g][k]);
          }
        }
        std::ostringstream msg;
        msg << "step budget of " << sim.max_steps << " exhausted with " << bins.size()
            << " bin(s) of a " << grids[g]->size() << "-bin grid below " << rule.per_bin
            << " pairs (first starving bin " << bins.front() << " centered at "
            << grids[g]->center(bins.front()) << " has " << have.front() << ")";
        throw StarvationError(msg.str(), std::move(bins), std::move(have));
      }
      const double next = stepper.advance(x, stride);
      bool on_grid = false;
      for (std::size_t g = 0; g < grids.size(); ++g) {
        const auto k = grids[g]->assign(x);
        if (!k) continue;
        on_grid = true;
        if (++counts[g][*k] == rule.per_bin && --unfilled[g] == 0) {
          out.fill_seconds[g] = seconds_since(t0);
          out.fill_steps[g] = stepper.taken() - budget_start;
          --open_grids;
        }
      }
      if (on_grid || rule.keep_off_grid) out.pairs.push_back({x, next});
      x = next;
    }
  }
  out.collection_seconds = seconds_since(t0);
  out.steps = stepper.taken() - burn_steps;
  return out;
}

std::vector<double> simulate_series(const SdeModel& model, const SimulationConfig& sim,
                                    double dt_obs, std::size_t n) {
  validate(sim, dt_obs);
  const std::uint64_t stride = steps_per(dt_obs, sim.dt_int, "observation step");
  const auto burn_steps = static_cast<std::uint64_t>(
      std::ceil(sim.resolved_burn_in(model) / sim.dt_int - 1e-9));
  Rng rng(sim.seed);
  Stepper stepper(model, sim, rng);
  double x = stepper.advance(sim.x0, burn_steps);
  std::vector<double> series;
  series.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) x = stepper.advance(x, stride);
    series.push_back(x);
  }
  return series;
}

StepNoise aggregate_noise(std::span<const StepNoise> fine, double fine_dt) noexcept {
  StepNoise coarse;
  for (const StepNoise& s : fine) {
    coarse.dz += s.dz + fine_dt * coarse.dw;
    coarse.dw += s.dw;
  }
  return coarse;
}

StrongOrderResult measure_strong_order(const SdeModel& model, Scheme scheme,
                                       const std::vector<double>& dts, double fine_dt,
                                       double horizon, double x0, std::size_t paths,
                                       std::uint64_t seed) {
  if (dts.size() < 2) throw InvalidArgument("strong-order sweep needs >= 2 step sizes");
  if (paths == 0) throw InvalidArgument("strong-order sweep needs >= 1 path");
  const std::uint64_t fine_steps = steps_per(horizon, fine_dt, "horizon");
  std::vector<std::uint64_t> ratio(dts.size());
  for (std::size_t i = 0; i < dts.size(); ++i) {
    ratio[i] = steps_per(dts[i], fine_dt, "coarse step");
    steps_per(horizon, dts[i], "horizon");
  }

  std::vector<double> sq_err(dts.size(), 0.0);
  for (std::size_t p = 0; p < paths; ++p) {
    Rng rng(derive_seed(seed, 0x5742ULL, p));
    double ref = x0;
    std::vector<double> coarse(dts.size(), x0);
    std::vector<StepNoise> acc(dts.size());
    std::vector<std::uint64_t> filled(dts.size(), 0);
    for (std::uint64_t s = 0; s < fine_steps; ++s) {
      const StepNoise noise = sample_step_noise(fine_dt, rng);
      ref = step(model, ref, derive_multiple_integrals(noise, fine_dt), Scheme::kStrong15);
      for (std::size_t i = 0; i < dts.size(); ++i) {
        acc[i].dz += noise.dz + fine_dt * acc[i].dw;
        acc[i].dw += noise.dw;
        if (++filled[i] == ratio[i]) {
          coarse[i] = step(model, coarse[i], derive_multiple_integrals(acc[i], dts[i]), scheme);
          acc[i] = {};
          filled[i] = 0;
        }
      }
    }
    if (!std::isfinite(ref)) throw DivergenceError("reference path diverged", horizon);
    for (std::size_t i = 0; i < dts.size(); ++i) {
      const double e = coarse[i] - ref;
      sq_err[i] += e * e;
    }
  }

  StrongOrderResult out;
  out.dts = dts;
  for (double s : sq_err) out.errors.push_back(std::sqrt(s / static_cast<double>(paths)));
  out.slope = log_log_slope(out.dts, out.errors);
  return out;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("log-log slope needs two equally sized series of length >= 2");
  }
  double mx = 0.0;
  double my = 0.0;
  const auto n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw InvalidArgument("log-log slope needs positive values");
    }
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace kmest
