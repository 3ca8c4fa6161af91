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

// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Every seed derives from kSeed, fixed before the first run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kmest/binning.hpp"
#include "kmest/experiment.hpp"
#include "kmest/integrators.hpp"
#include "kmest/regression.hpp"
#include "kmest/rng.hpp"
#include "kmest/stationary_density.hpp"
#include "kmest/stochastic_integrals.hpp"

namespace {

using namespace kmest;

constexpr std::uint64_t kSeed = 20240607;
constexpr std::size_t kMc = 100;

// Pinned tolerances.
constexpr double kSigmas = 3.0;
constexpr double kMomentRuntimeLimit = 30.0;
constexpr double kOuRuntimeLimit = 60.0;
constexpr double kConstRegimeMaxRatio = 2.0;
constexpr double kSpearmanLimit = -0.8;
constexpr double kDiffSlopeTarget = -1.0;
constexpr double kDiffSlopeTol = 0.2;
constexpr double kDxMaxRatio = 1.5;
constexpr double kTableFactor = 2.0;
constexpr double kDoublingLo = 1.5;
constexpr double kDoublingHi = 2.8;
constexpr double kDoublingShare = 0.8;
constexpr double kCubicLo = -1.2;
constexpr double kCubicHi = -0.85;
constexpr double kOtherDriftMax = 0.1;
constexpr double kDiffCoefTol = 0.05;
constexpr double kNegativeCubicMax = 0.5;
constexpr double kBiasRelTol = 0.30;
constexpr double kBiasScaleLo = 2.8;
constexpr double kBiasScaleHi = 5.2;
constexpr double kRichardsonLo = 12.0;
constexpr double kRichardsonHi = 20.0;
constexpr double kMilsteinSlope = 1.0;
constexpr double kStrong15Slope = 1.5;
constexpr double kSlopeTol = 0.25;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok) { pass = pass && ok; }
};

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

SdeModel reference(const std::string& name) { return builtin_model(name, default_params(name)); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

// 1. Moments of the step integrals.
void moment_suite(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  struct Target {
    const char* spec;
    std::function<double(double)> value;
  };
  const std::vector<Target> targets{
      {"I1^2", [](double dt) { return dt; }},
      {"I11^2", [](double dt) { return dt * dt / 2.0; }},
      {"I01^2", [](double dt) { return dt * dt * dt / 3.0; }},
      {"I10^2", [](double dt) { return dt * dt * dt / 3.0; }},
      {"I11", [](double) { return 0.0; }},
      {"I111", [](double) { return 0.0; }},
      {"I1*I11", [](double) { return 0.0; }}};
  std::vector<MomentSpec> specs;
  for (const auto& t : targets) specs.push_back(MomentSpec::parse(t.spec));
  double worst = 0.0;
  for (double dt : {0.005, 0.01, 0.02}) {
    Rng rng(derive_seed(kSeed, 1, static_cast<std::uint64_t>(std::llround(dt * 1e4))));
    const auto est = estimate_moments(specs, dt, 1'000'000, rng);
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const double z = std::abs(est[i].mean - targets[i].value(dt)) / est[i].standard_error;
      worst = std::max(worst, z);
      o.check(z <= kSigmas);
    }
  }
  const double secs = seconds_since(t0);
  o.check(secs < kMomentRuntimeLimit);
  o.detail << "max |z| = " << worst << " over 21 moments, " << secs << " s";
}

// 2. Deterministic identities.
void identities(Outcome& o) {
  std::size_t broken = 0;
  Rng rng(derive_seed(kSeed, 2, 0));
  const double dt = 0.01;
  for (std::size_t i = 0; i < 1'000'000; ++i) {
    const StepNoise n = sample_step_noise(dt, rng);
    const MultipleIntegrals m = derive_multiple_integrals(n, dt);
    const double w = n.dw;
    if (m.i11 != (w * w - dt) / 2.0 || m.i111 != (w * w * w - 3.0 * dt * w) / 6.0 ||
        m.i01 + m.i10 != w * dt) {
      ++broken;
    }
  }
  o.check(broken == 0);
  o.detail << broken << " of 1000000 steps violate an identity";
}

// 3. OU estimates against exact conditional moments at the realized starts.
void ou_oracle(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const SdeModel ou = reference("ou");
  const BinGrid grid = make_grid(0.5, 10);
  const std::size_t m = 100'000;
  const double dt = 0.01;
  SimulationConfig sim;
  sim.seed = derive_seed(kSeed, 3, 0);
  const auto pairs = generate_pairs(ou, sim, dt, FixedPerBin{m, grid});
  const BinnedEstimate e = estimate(pairs, grid, EstimateOptions{m});
  const double decay = std::exp(-dt) - 1.0;
  const double var_step = (1.0 - std::exp(-2.0 * dt)) / 2.0;
  std::vector<double> a(grid.size(), 0.0), d(grid.size(), 0.0);
  std::vector<std::size_t> n(grid.size(), 0);
  for (const auto& p : pairs.pairs) {
    const auto k = grid.assign(p.x_start);
    if (!k || n[*k] == m) continue;
    ++n[*k];
    a[*k] += p.x_start * decay / dt;
    d[*k] += (var_step + p.x_start * p.x_start * decay * decay) / dt;
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double za = std::abs(e.drift_hat[k] - a[k] / static_cast<double>(n[k])) / e.drift_stderr[k];
    const double zd = std::abs(e.diff2_hat[k] - d[k] / static_cast<double>(n[k])) / e.diff2_stderr[k];
    worst = std::max({worst, za, zd});
    o.check(za <= kSigmas && zd <= kSigmas);
  }
  const double secs = seconds_since(t0);
  o.check(secs < kOuRuntimeLimit);
  o.detail << "max |z| = " << worst << " over 20 bin moments, " << secs << " s";
}

ExperimentConfig cubic_experiment() {
  ExperimentConfig c;
  c.model = "cubic";
  c.half_width = 0.5;
  c.nb_list = {10, 20, 40};
  c.mc = kMc;
  c.dt_int = 5e-4;
  c.workers = workers();
  return c;
}

std::vector<const CellReport*> cells_with_nb(const MSEReport& r, std::size_t nb) {
  std::vector<const CellReport*> out;
  for (const auto& c : r.cells) {
    if (c.cell.nb == nb) out.push_back(&c);
  }
  return out;
}

double max_over_min(const std::vector<double>& v) {
  return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
}

// 4 and 5 share the two regime runs.
void regimes(Outcome& c4, Outcome& c5) {
  ExperimentConfig fixed = cubic_experiment();
  fixed.regime = Regime::kMdtConst;
  fixed.m_dt = {{50, 0.02}, {100, 0.01}, {200, 0.005}, {500, 0.002}, {1000, 0.001}};
  fixed.seed = derive_seed(kSeed, 4, 0);
  ExperimentConfig growing = cubic_experiment();
  growing.regime = Regime::kMdtInf;
  growing.dt = 0.01;
  growing.m_list = {50, 100, 200, 500, 1000};
  growing.seed = derive_seed(kSeed, 4, 1);
  const MSEReport rc = run_mse(fixed);
  const MSEReport ri = run_mse(growing);

  std::vector<double> const_drift;
  for (const auto* c : cells_with_nb(rc, 10)) const_drift.push_back(c->mse_drift);
  const double const_ratio = max_over_min(const_drift);
  std::vector<double> ms, inf_drift, inf_diff;
  for (const auto* c : cells_with_nb(ri, 10)) {
    ms.push_back(static_cast<double>(c->cell.m));
    inf_drift.push_back(c->mse_drift);
    inf_diff.push_back(c->mse_diff);
  }
  const double rho = spearman(ms, inf_drift);
  const double slope = log_log_slope(ms, inf_diff);
  c4.check(const_ratio <= kConstRegimeMaxRatio);
  c4.check(rho <= kSpearmanLimit);
  c4.check(std::abs(slope - kDiffSlopeTarget) <= kDiffSlopeTol);
  c4.detail << "M dt const drift max/min = " << const_ratio << "; growing M drift Spearman = "
            << rho << ", diffusion slope = " << slope << " (NB = 10, mc = " << kMc << ")";

  double worst_a = 0.0, worst_d = 0.0;
  for (const MSEReport* r : {&rc, &ri}) {
    const auto base = cells_with_nb(*r, 10);
    for (std::size_t i = 0; i < base.size(); ++i) {
      std::vector<double> a, d;
      for (std::size_t nb : {10u, 20u, 40u}) {
        const CellReport* c = cells_with_nb(*r, nb)[i];
        a.push_back(c->mse_drift);
        d.push_back(c->mse_diff);
      }
      worst_a = std::max(worst_a, max_over_min(a));
      worst_d = std::max(worst_d, max_over_min(d));
    }
  }
  c5.check(worst_a <= kDxMaxRatio && worst_d <= kDxMaxRatio);
  c5.detail << "worst max/min across NB 10/20/40: drift " << worst_a << ", diffusion " << worst_d
            << " over 10 (M, dt) cells";
}

// 6. Double-well additive reference errors.
void double_well_table(Outcome& o) {
  ExperimentConfig c;
  c.model = "dw_additive";
  c.half_width = 1.0;
  c.nb_list = {20};
  c.regime = Regime::kMdtConst;
  c.m_dt = {{1000, 0.01}, {2000, 0.01}};
  c.mc = kMc;
  c.seed = derive_seed(kSeed, 6, 0);
  c.workers = workers();
  const MSEReport r = run_mse(c);
  auto within = [](double v, double ref) { return v <= ref * kTableFactor && v >= ref / kTableFactor; };
  const double a1 = r.cells[0].mse_drift, d1 = r.cells[0].mse_diff, a2 = r.cells[1].mse_drift;
  o.check(within(a1, 0.025));
  o.check(within(d1, 1.4e-4));
  o.check(within(a2, 0.0123));
  o.detail << "(1000, 0.01): drift " << a1 << " vs 0.025, diffusion " << d1
           << " vs 1.4e-4; (2000, 0.01): drift " << a2 << " vs 0.0123";
}

// 7. M doubling over the dt-dx sweep.
void doubling(Outcome& o) {
  ExperimentConfig c = cubic_experiment();
  c.regime = Regime::kDxDtSweep;
  c.dt_list = {0.0005, 0.001, 0.0025, 0.005, 0.007, 0.01};
  c.nb_list = {40, 20, 10, 4};
  c.seed = derive_seed(kSeed, 7, 0);
  const DoublingReport r = run_m_doubling(c, 500, 1000);
  std::size_t ok_a = 0, ok_d = 0;
  double lo = 1e9, hi = 0.0;
  for (const auto& cell : r.cells) {
    const auto in = [](double v) { return v >= kDoublingLo && v <= kDoublingHi; };
    if (!cell.drift_degenerate && in(cell.drift_ratio)) ++ok_a;
    if (!cell.diff_degenerate && in(cell.diff_ratio)) ++ok_d;
    lo = std::min({lo, cell.drift_ratio, cell.diff_ratio});
    hi = std::max({hi, cell.drift_ratio, cell.diff_ratio});
  }
  const double n = static_cast<double>(r.cells.size());
  o.check(ok_a >= kDoublingShare * n && ok_d >= kDoublingShare * n);
  o.detail << "ratios in range: drift " << ok_a << "/" << r.cells.size() << ", diffusion " << ok_d
           << "/" << r.cells.size() << " (all ratios within [" << lo << ", " << hi << "])";
}

std::string poly(const std::vector<double>& c) {
  std::ostringstream s;
  s.precision(3);
  for (std::size_t j = c.size(); j-- > 0;) {
    if (c[j] == 0.0) continue;
    s << (c[j] < 0 ? " - " : " + ") << std::abs(c[j]);
    if (j > 0) s << "x" << (j > 1 ? "^" + std::to_string(j) : "");
  }
  return s.str();
}

struct PipelineRun {
  PipelineResult fit;
  double median_drift_stderr = 0.0;
};

PipelineRun cubic_pipeline(double dt, std::uint64_t seed) {
  const BinGrid grid = make_grid(0.5, 20);
  SimulationConfig sim;
  sim.seed = seed;
  const auto pairs = generate_pairs(reference("cubic"), sim, dt, FixedPerBin{1000, grid});
  const BinnedEstimate e = estimate(pairs, grid, EstimateOptions{1000});
  PipelineOptions opt;
  opt.fit.degree = 7;
  opt.fit.method = FitMethod{FitKind::kLasso, std::nullopt};
  std::vector<double> se = e.drift_stderr;
  std::nth_element(se.begin(), se.begin() + se.size() / 2, se.end());
  return {fit_pipeline(e, polynomial_truth("cubic", default_params("cubic")), opt),
          se[se.size() / 2]};
}

// 8. Polynomial recovery and its failure at small dt.
void table_one(Outcome& o) {
  const PipelineRun good = cubic_pipeline(0.01, derive_seed(kSeed, 8, 0));
  const auto& a = good.fit.drift.coefficients;
  const auto& d = good.fit.diff2.coefficients;
  bool others_small = true;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (j != 3 && std::abs(a[j]) > kOtherDriftMax) others_small = false;
  }
  const bool cubic_ok = a[3] >= kCubicLo && a[3] <= kCubicHi;
  const bool diff_ok = std::abs(d[2] - 0.5) <= kDiffCoefTol && std::abs(d[1] - 1.0) <= kDiffCoefTol &&
                       std::abs(d[0] - 0.5) <= kDiffCoefTol;
  const PipelineRun bad = cubic_pipeline(0.001, derive_seed(kSeed, 8, 1));
  const auto& b = bad.fit.drift.coefficients;
  const bool not_recovered = std::abs(b[3]) < kNegativeCubicMax ||
                             std::max(std::abs(b[5]), std::abs(b[7])) > std::abs(b[3]);
  o.check(cubic_ok && others_small && diff_ok && not_recovered);
  o.detail << "(1000, 0.01) drift:" << poly(a) << "; diffusion:" << poly(d) << "; (1000, 0.001) drift:"
           << poly(b) << " [cubic " << (cubic_ok ? "ok" : "off") << ", other drift "
           << (others_small ? "ok" : "large") << ", diffusion " << (diff_ok ? "ok" : "off")
           << ", small-dt failure " << (not_recovered ? "reproduced" : "absent")
           << "; median per-bin drift stderr " << good.median_drift_stderr
           << " against |x^3| <= 0.107 on the bin centers]";
}

// 9. Gap between the centered and plain drift estimators.
double centered_gap(double dx, std::uint64_t seed) {
  const BinGrid g = make_grid(Interval{0.4 - dx / 2.0, 0.4 + dx / 2.0}, 1);
  SimulationConfig sim;
  sim.seed = seed;
  sim.dt_int = 0.01;
  const std::size_t m = 1'000'000;
  const auto pairs = generate_pairs(reference("ou"), sim, 0.01, FixedPerBin{m, g});
  return estimate_centered(pairs, g, EstimateOptions{m}).drift_hat[0] -
         estimate(pairs, g, EstimateOptions{m}).drift_hat[0];
}

void bias_structure(Outcome& o) {
  // rho'/rho = -x / sigma_st^2 with sigma_st^2 = 1/2.
  const double predicted = -2.0 * 0.4 / 12.0 * 0.01 / 0.01;
  const double wide = centered_gap(0.1, derive_seed(kSeed, 9, 0));
  const double narrow = centered_gap(0.05, derive_seed(kSeed, 9, 1));
  const double rel = std::abs(wide - predicted) / std::abs(predicted);
  const double scale = wide / narrow;
  o.check(rel <= kBiasRelTol);
  o.check(scale >= kBiasScaleLo && scale <= kBiasScaleHi);
  o.detail << "gap " << wide << " vs predicted " << predicted << " (" << 100.0 * rel
           << "% off); halving dx shrinks it by " << scale;
}

// 10. Fourth-order remainder of the small-bin expansion.
void expansion(Outcome& o) {
  const std::vector<std::pair<std::string, SmoothFunction>> fs{
      {"x", {[](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }}},
      {"x^2", {[](double x) { return x * x; }, [](double x) { return 2.0 * x; },
               [](double) { return 2.0; }}},
      {"sin", {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); },
               [](double x) { return -std::sin(x); }}}};
  const DensityFunction ou = *reference("ou").stationary_density();
  const DensityFunction cubic = stationary_density(reference("cubic")).as_function();
  const std::vector<std::pair<std::string, const DensityFunction*>> densities{{"ou", &ou},
                                                                              {"cubic", &cubic}};
  const double xk = 0.4;
  double lo = 1e9, hi = 0.0;
  for (const auto& [dn, rho] : densities) {
    for (const auto& [fn, f] : fs) {
      const double r1 = expansion_check(f, *rho, {xk - 0.05, xk + 0.05}).residual;
      const double r2 = expansion_check(f, *rho, {xk - 0.025, xk + 0.025}).residual;
      const double ratio = r1 / r2;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      o.check(ratio >= kRichardsonLo && ratio <= kRichardsonHi);
    }
  }
  o.detail << "residual ratios for dx 0.1 -> 0.05 at x_k = 0.4 within [" << lo << ", " << hi
           << "] over 3 functions x 2 densities";
}

// 11. Strong convergence order on coupled paths.
void strong_order(Outcome& o) {
  const SdeModel cubic = reference("cubic");
  const std::vector<double> dts{4e-4, 2e-4, 1e-4, 5e-5};
  const auto mil = measure_strong_order(cubic, Scheme::kMilstein, dts, 2.5e-6, 1.0, 0.0, 200,
                                        derive_seed(kSeed, 11, 0));
  const auto s15 = measure_strong_order(cubic, Scheme::kStrong15, dts, 2.5e-6, 1.0, 0.0, 200,
                                        derive_seed(kSeed, 11, 0));
  o.check(std::abs(mil.slope - kMilsteinSlope) <= kSlopeTol);
  o.check(std::abs(s15.slope - kStrong15Slope) <= kSlopeTol);
  o.detail << "milstein slope " << mil.slope << ", strong15 slope " << s15.slope;
}

}  // namespace

// --known-failure N marks criterion N as expected to fail. The run succeeds
// only when the failing set equals the known set exactly.
int main(int argc, char** argv) {
  std::vector<int> known;
  for (int i = 1; i < argc; ++i) {
    if (std::string(argv[i]) == "--known-failure" && i + 1 < argc) {
      known.push_back(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--known-failure N]...\n", argv[0]);
      return 2;
    }
  }
  struct Entry {
    int id;
    const char* title;
    Outcome outcome;
    double seconds = 0.0;
  };
  std::vector<Entry> entries(11);
  const char* titles[] = {"step-integral moments",       "integral identities",
                          "OU conditional moments",      "regime dichotomy",
                          "bin-width insensitivity",     "double-well reference errors",
                          "M doubling",                  "polynomial recovery",
                          "centered-estimator bias",     "expansion remainder order",
                          "strong order"};
  for (int i = 0; i < 11; ++i) {
    entries[static_cast<std::size_t>(i)].id = i + 1;
    entries[static_cast<std::size_t>(i)].title = titles[i];
  }
  auto timed = [&](std::size_t i, const std::function<void()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const std::exception& e) {
      entries[i].outcome.pass = false;
      entries[i].outcome.detail << "threw: " << e.what();
    }
    entries[i].seconds += seconds_since(t0);
  };
  timed(0, [&] { moment_suite(entries[0].outcome); });
  timed(1, [&] { identities(entries[1].outcome); });
  timed(2, [&] { ou_oracle(entries[2].outcome); });
  timed(3, [&] { regimes(entries[3].outcome, entries[4].outcome); });
  timed(5, [&] { double_well_table(entries[5].outcome); });
  timed(6, [&] { doubling(entries[6].outcome); });
  timed(7, [&] { table_one(entries[7].outcome); });
  timed(8, [&] { bias_structure(entries[8].outcome); });
  timed(9, [&] { expansion(entries[9].outcome); });
  timed(10, [&] { strong_order(entries[10].outcome); });

  int failed = 0;
  int surprises = 0;
  for (const Entry& e : entries) {
    std::printf("[%s] criterion %d: %s: %s (%.1f s)\n", e.outcome.pass ? "PASS" : "FAIL", e.id,
                e.title, e.outcome.detail.str().c_str(), e.seconds);
    const bool expected_fail = std::find(known.begin(), known.end(), e.id) != known.end();
    if (!e.outcome.pass) ++failed;
    if (e.outcome.pass == expected_fail) ++surprises;
  }
  std::printf("%d of 11 criteria passed", 11 - failed);
  if (!known.empty()) {
    std::printf("; known failures:");
    for (int k : known) std::printf(" %d", k);
    std::printf("; %d outcome(s) differ from expectation", surprises);
  }
  std::printf("\n");
  return surprises == 0 ? 0 : 1;
}
