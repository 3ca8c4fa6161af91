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

#include "kmest/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

#include "kmest/error.hpp"
#include "kmest/rng.hpp"

namespace kmest {

std::string_view to_string(Regime regime) noexcept {
  switch (regime) {
    case Regime::kMdtConst: return "mdt_const";
    case Regime::kMdtInf: return "mdt_inf";
    case Regime::kDxDtSweep: return "dxdt_sweep";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  if (name == "mdt_const") return Regime::kMdtConst;
  if (name == "mdt_inf") return Regime::kMdtInf;
  if (name == "dxdt_sweep") return Regime::kDxDtSweep;
  throw InvalidArgument("unknown regime '" + std::string(name) +
                        "' (expected mdt_const, mdt_inf or dxdt_sweep)");
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

// Cells sharing one trajectory per realization. cells[0] owns the primary
// (finest) grid.
struct Group {
  std::size_t m = 0;
  double dt_obs = 0.0;
  std::vector<std::size_t> cells;
};

std::vector<Group> make_groups(const ExperimentConfig& config,
                               const std::vector<ExperimentCell>& cells) {
  std::vector<Group> keyed;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto it = std::find_if(keyed.begin(), keyed.end(), [&](const Group& g) {
      return g.m == cells[i].m && g.dt_obs == cells[i].dt_obs;
    });
    if (it == keyed.end()) {
      keyed.push_back({cells[i].m, cells[i].dt_obs, {}});
      it = keyed.end() - 1;
    }
    it->cells.push_back(i);
  }
  std::vector<Group> groups;
  for (Group& g : keyed) {
    std::stable_sort(g.cells.begin(), g.cells.end(), [&](std::size_t a, std::size_t b) {
      return cells[a].nb > cells[b].nb;
    });
    const std::size_t finest = cells[g.cells.front()].nb;
    const bool nested = std::all_of(g.cells.begin(), g.cells.end(), [&](std::size_t c) {
      return finest % cells[c].nb == 0;
    });
    if (config.share_trajectories && nested) {
      groups.push_back(std::move(g));
    } else {
      for (std::size_t c : g.cells) groups.push_back({g.m, g.dt_obs, {c}});
    }
  }
  return groups;
}

std::uint64_t group_stream(const Group& g, const std::vector<ExperimentCell>& cells) {
  std::uint64_t h = mix64(g.m);
  h = mix64(h ^ std::bit_cast<std::uint64_t>(g.dt_obs));
  return mix64(h ^ cells[g.cells.front()].nb);
}

SimulationConfig simulation_for(const ExperimentConfig& config, std::uint64_t seed) {
  SimulationConfig sim;
  sim.scheme = config.scheme;
  sim.dt_int = config.dt_int;
  sim.burn_in = config.burn_in;
  sim.x0 = config.x0;
  sim.max_steps = config.max_steps;
  sim.seed = seed;
  return sim;
}

FixedPerBin stop_for(const ExperimentConfig& config, const Group& g,
                     const std::vector<ExperimentCell>& cells) {
  FixedPerBin stop{g.m, make_grid(config.half_width, cells[g.cells.front()].nb), false, {}};
  for (std::size_t i = 1; i < g.cells.size(); ++i) {
    stop.also.push_back(make_grid(config.half_width, cells[g.cells[i]].nb));
  }
  return stop;
}

std::string describe(const ExperimentCell& c) {
  std::ostringstream s;
  s << "cell M=" << c.m << " dt=" << c.dt_obs << " nb=" << c.nb;
  return s.str();
}

TransitionPairSet simulate_group(const ExperimentConfig& config, const SdeModel& model,
                                 const Group& g, const std::vector<ExperimentCell>& cells,
                                 std::size_t r) {
  const std::uint64_t seed = derive_seed(config.seed, group_stream(g, cells), r);
  try {
    return generate_pairs(model, simulation_for(config, seed), g.dt_obs,
                          stop_for(config, g, cells));
  } catch (const StarvationError& e) {
    throw StarvationError(describe(cells[g.cells.front()]) + ", realization " +
                              std::to_string(r) + ": " + e.what(),
                          e.starving_bins(), e.starving_counts());
  }
}

struct TaskResult {
  bool excluded = false;
  std::vector<double> drift;
  std::vector<double> diff;
  std::vector<double> seconds;
  std::vector<std::uint64_t> steps;
  std::exception_ptr error;
};

}  // namespace

std::vector<ExperimentCell> expand_cells(const ExperimentConfig& c) {
  require(c.half_width > 0.0 && std::isfinite(c.half_width), "grid half-width must be > 0");
  require(!c.nb_list.empty(), "at least one bin count is required");
  for (std::size_t nb : c.nb_list) require(nb >= 1, "bin counts must be >= 1");
  require(c.mc >= 1, "mc must be >= 1");
  require(c.workers >= 1, "workers must be >= 1");
  require(c.dt_int > 0.0, "integration step must be > 0");
  require(c.max_excluded_fraction >= 0.0 && c.max_excluded_fraction <= 1.0,
          "excluded fraction must lie in [0, 1]");

  std::vector<std::pair<std::size_t, double>> m_dt;
  switch (c.regime) {
    case Regime::kMdtConst:
      m_dt = c.m_dt;
      break;
    case Regime::kMdtInf:
      for (std::size_t m : c.m_list) m_dt.emplace_back(m, c.dt);
      break;
    case Regime::kDxDtSweep:
      for (double dt : c.dt_list) m_dt.emplace_back(c.m, dt);
      break;
  }
  require(!m_dt.empty(), "experiment defines no (M, dt) cells");
  std::vector<ExperimentCell> cells;
  for (const auto& [m, dt] : m_dt) {
    require(m >= 1, "per-bin count M must be >= 1");
    require(dt > 0.0 && std::isfinite(dt), "observation step must be > 0");
    for (std::size_t nb : c.nb_list) {
      cells.push_back({m, dt, nb, 2.0 * c.half_width / static_cast<double>(nb)});
    }
  }
  return cells;
}

SdeModel resolve_model(const ExperimentConfig& config) {
  if (config.custom_model) return *config.custom_model;
  return builtin_model(config.model,
                       config.params.empty() ? default_params(config.model) : config.params);
}

std::pair<double, double> mse_terms(const BinnedEstimate& est, const SdeModel& model) {
  const Interval span = est.grid.interval();
  const double norm = est.grid.width() / span.width();
  double drift = 0.0;
  double diff = 0.0;
  for (std::size_t k = 0; k < est.grid.size(); ++k) {
    if (est.empty(k)) {
      throw InvalidArgument("MSE needs every bin filled; bin " + std::to_string(k) +
                            " is empty");
    }
    const double x = est.grid.center(k);
    const double ea = est.drift_hat[k] - model.drift(x);
    const double ed = est.diff2_hat[k] - model.diffusion_squared(x);
    drift += ea * ea;
    diff += ed * ed;
  }
  return {drift * norm, diff * norm};
}

TransitionPairSet realization_pairs(const ExperimentConfig& config,
                                    const ExperimentCell& cell, std::size_t r) {
  const std::vector<ExperimentCell> cells = expand_cells(config);
  const SdeModel model = resolve_model(config);
  for (const Group& g : make_groups(config, cells)) {
    for (std::size_t c : g.cells) {
      if (cells[c].m == cell.m && cells[c].dt_obs == cell.dt_obs && cells[c].nb == cell.nb) {
        return simulate_group(config, model, g, cells, r);
      }
    }
  }
  throw InvalidArgument(describe(cell) + " is not part of the experiment");
}

MSEReport run_mse(const ExperimentConfig& config) {
  const std::vector<ExperimentCell> cells = expand_cells(config);
  const SdeModel model = resolve_model(config);
  const std::vector<Group> groups = make_groups(config, cells);
  const SimulationConfig probe = simulation_for(config, 0);
  const auto burn_steps = static_cast<std::uint64_t>(
      std::ceil(probe.resolved_burn_in(model) / config.dt_int - 1e-9));

  const std::size_t tasks = groups.size() * config.mc;
  std::vector<TaskResult> results(tasks);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto work = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks || failed.load()) return;
      const Group& g = groups[t / config.mc];
      const std::size_t r = t % config.mc;
      TaskResult& out = results[t];
      try {
        const TransitionPairSet pairs = simulate_group(config, model, g, cells, r);
        for (std::size_t i = 0; i < g.cells.size(); ++i) {
          const ExperimentCell& cell = cells[g.cells[i]];
          const BinnedEstimate est = estimate(pairs, make_grid(config.half_width, cell.nb),
                                              EstimateOptions{cell.m});
          const auto [drift, diff] = mse_terms(est, model);
          out.drift.push_back(drift);
          out.diff.push_back(diff);
          out.seconds.push_back(pairs.burn_in_seconds + pairs.fill_seconds[i]);
          out.steps.push_back(burn_steps + pairs.fill_steps[i]);
        }
      } catch (const DivergenceError&) {
        out.excluded = true;
      } catch (...) {
        out.error = std::current_exception();
        failed.store(true);
      }
    }
  };

  const std::size_t n_workers = std::min(config.workers, std::max<std::size_t>(tasks, 1));
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  // Lowest-index failure wins so the reported error does not depend on scheduling.
  for (const TaskResult& r : results) {
    if (r.error) std::rethrow_exception(r.error);
  }

  MSEReport report{config, {}};
  report.cells.resize(cells.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const Group& g = groups[gi];
    for (std::size_t i = 0; i < g.cells.size(); ++i) {
      CellReport& cr = report.cells[g.cells[i]];
      cr.cell = cells[g.cells[i]];
      double sum_a = 0.0;
      double sum_d = 0.0;
      for (std::size_t r = 0; r < config.mc; ++r) {
        const TaskResult& res = results[gi * config.mc + r];
        if (res.excluded) {
          ++cr.excluded;
          cr.drift_terms.push_back(nan);
          cr.diff_terms.push_back(nan);
          continue;
        }
        cr.drift_terms.push_back(res.drift[i]);
        cr.diff_terms.push_back(res.diff[i]);
        sum_a += res.drift[i];
        sum_d += res.diff[i];
        cr.gen_seconds += res.seconds[i];
        cr.steps += res.steps[i];
        ++cr.realizations;
      }
      if (static_cast<double>(cr.excluded) >
          config.max_excluded_fraction * static_cast<double>(config.mc)) {
        std::ostringstream msg;
        msg << describe(cr.cell) << ": " << cr.excluded << " of " << config.mc
            << " realizations diverged";
        throw DivergenceError(msg.str(), 0.0);
      }
      const auto n = static_cast<double>(cr.realizations);
      cr.mse_drift = sum_a / n;
      cr.mse_diff = sum_d / n;
      if (cr.realizations > 1) {
        double va = 0.0;
        double vd = 0.0;
        for (std::size_t r = 0; r < config.mc; ++r) {
          if (std::isnan(cr.drift_terms[r])) continue;
          va += (cr.drift_terms[r] - cr.mse_drift) * (cr.drift_terms[r] - cr.mse_drift);
          vd += (cr.diff_terms[r] - cr.mse_diff) * (cr.diff_terms[r] - cr.mse_diff);
        }
        cr.se_drift = std::sqrt(va / (n - 1.0) / n);
        cr.se_diff = std::sqrt(vd / (n - 1.0) / n);
      }
    }
  }
  return report;
}

DoublingReport run_m_doubling(const ExperimentConfig& config, std::size_t m1,
                              std::size_t m2) {
  require(config.regime == Regime::kDxDtSweep, "M doubling needs a dxdt_sweep config");
  require(m1 >= 1 && m2 == 2 * m1, "M doubling needs M2 = 2 M1");
  ExperimentConfig c1 = config;
  c1.m = m1;
  ExperimentConfig c2 = config;
  c2.m = m2;
  DoublingReport out{run_mse(c1), run_mse(c2), {}};
  constexpr double kTiny = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < out.at_m1.cells.size(); ++i) {
    const CellReport& a = out.at_m1.cells[i];
    const CellReport& b = out.at_m2.cells[i];
    DoublingCell d;
    d.cell = a.cell;
    d.drift_degenerate = !(b.mse_drift > kTiny);
    d.diff_degenerate = !(b.mse_diff > kTiny);
    d.drift_ratio = d.drift_degenerate ? std::numeric_limits<double>::quiet_NaN()
                                       : a.mse_drift / b.mse_drift;
    d.diff_ratio = d.diff_degenerate ? std::numeric_limits<double>::quiet_NaN()
                                     : a.mse_diff / b.mse_diff;
    out.cells.push_back(d);
  }
  return out;
}

std::vector<TimingEntry> timing_report(const ExperimentConfig& config) {
  const MSEReport report = run_mse(config);
  std::vector<TimingEntry> out;
  for (const CellReport& c : report.cells) out.push_back({c.cell, c.gen_seconds, c.steps});
  return out;
}

}  // namespace kmest
