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

#include "kmest_cli/app.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <optional>
#include <sstream>

#include "kmest/binning.hpp"
#include "kmest/error.hpp"
#include "kmest/integrators.hpp"
#include "kmest/series_io.hpp"
#include "kmest/stochastic_integrals.hpp"

#ifndef KMEST_VERSION
#define KMEST_VERSION "0.0.0"
#endif

namespace kmest::cli {

namespace {

using json = nlohmann::ordered_json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads `key`, storing `fallback` first when absent so the resolved
// configuration lists every value actually used.
std::string resolve(Config& cfg, const std::string& key, const std::string& fallback) {
  if (!cfg.has(key)) cfg.set(key, fallback);
  return cfg.require_string(key);
}

double resolve_double(Config& cfg, const std::string& key, double fallback) {
  if (!cfg.has(key)) cfg.set(key, format_double(fallback));
  return *cfg.get_double(key);
}

std::uint64_t resolve_uint(Config& cfg, const std::string& key, std::uint64_t fallback) {
  if (!cfg.has(key)) cfg.set(key, std::to_string(fallback));
  return *cfg.get_uint(key);
}

bool resolve_bool(Config& cfg, const std::string& key, bool fallback) {
  if (!cfg.has(key)) cfg.set(key, fallback ? "true" : "false");
  return *cfg.get_bool(key);
}

std::uint64_t require_seed(Config& cfg) {
  const auto seed = cfg.get_uint("seed");
  if (!seed) throw UsageError("this subcommand needs --seed (or a 'seed' config key)");
  return *seed;
}

ParamMap resolve_params(Config& cfg, const std::string& model) {
  ParamMap params;
  for (const auto& [key, value] : cfg.section("model.params")) {
    params[key] = *cfg.get_double("model.params." + key);
  }
  if (params.empty()) {
    params = default_params(model);
    for (const auto& [key, value] : params) cfg.set("model.params." + key, format_double(value));
  }
  return params;
}

SimulationConfig resolve_simulation(Config& cfg) {
  SimulationConfig sim;
  sim.scheme = parse_scheme(resolve(cfg, "sim.scheme", "strong15"));
  sim.dt_int = resolve_double(cfg, "sim.dt_int", 5e-4);
  if (const auto b = cfg.get_double("sim.burn_in")) sim.burn_in = *b;
  sim.x0 = resolve_double(cfg, "sim.x0", 0.0);
  sim.max_steps = resolve_uint(cfg, "sim.max_steps", sim.max_steps);
  return sim;
}

BinGrid resolve_grid(Config& cfg) {
  const std::size_t nb = static_cast<std::size_t>(resolve_uint(cfg, "grid.nb", 10));
  if (cfg.has("grid.lo") || cfg.has("grid.hi")) {
    const auto lo = cfg.get_double("grid.lo");
    const auto hi = cfg.get_double("grid.hi");
    if (!lo || !hi) throw ConfigError("grid.lo and grid.hi must be given together");
    return make_grid(Interval{*lo, *hi}, nb);
  }
  return make_grid(resolve_double(cfg, "grid.L", 0.5), nb);
}

struct Outputs {
  std::vector<std::string> inputs;
  std::vector<std::string> files;
};

// Writes to --out when given, else to the caller's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : path_(path) {
    if (!path.empty()) file_ = open_output(path);
    stream_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& stream() { return *stream_; }
  void close(Outputs& outputs) {
    if (!path_.empty()) {
      file_.close();
      if (!file_) throw IoError("failed writing '" + path_ + "'");
      outputs.files.push_back(path_);
    }
  }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

void write_json_file(const std::string& path, const json& doc, Outputs& outputs) {
  std::ofstream f = open_output(path);
  f << doc.dump(2) << '\n';
  f.close();
  if (!f) throw IoError("failed writing '" + path + "'");
  outputs.files.push_back(path);
}

json config_json(const Config& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.entries()) j[k] = v;
  return j;
}

// ---- simulate ---------------------------------------------------------------

void cmd_simulate(Config& cfg, const std::string& out_path, std::ostream& out,
                  Outputs& outputs) {
  const std::string name = resolve(cfg, "model.name", "cubic");
  const SdeModel model = builtin_model(name, resolve_params(cfg, name));
  SimulationConfig sim = resolve_simulation(cfg);
  sim.seed = require_seed(cfg);
  const double dt_obs = resolve_double(cfg, "simulate.dt_obs", 0.01);
  const std::string format = resolve(cfg, "simulate.format", "pairs");
  Sink sink(out_path, out);
  if (format == "series") {
    const auto n = static_cast<std::size_t>(resolve_uint(cfg, "simulate.samples", 10000));
    const std::vector<double> series = simulate_series(model, sim, dt_obs, n);
    write_series(sink.stream(), series, dt_obs);
  } else if (format == "pairs") {
    const std::string stop = resolve(cfg, "simulate.stop", "count");
    StopRule rule;
    if (stop == "count") {
      rule = FixedCount{static_cast<std::size_t>(resolve_uint(cfg, "simulate.count", 10000))};
    } else if (stop == "per_bin") {
      rule = FixedPerBin{static_cast<std::size_t>(resolve_uint(cfg, "simulate.per_bin", 500)),
                         resolve_grid(cfg), false, {}};
    } else {
      throw ConfigError("simulate.stop must be 'count' or 'per_bin'");
    }
    write_pairs(sink.stream(), generate_pairs(model, sim, dt_obs, rule));
  } else {
    throw ConfigError("simulate.format must be 'pairs' or 'series'");
  }
  sink.close(outputs);
}

// ---- estimate ---------------------------------------------------------------

void cmd_estimate(Config& cfg, const std::string& out_path, std::ostream& out,
                  Outputs& outputs) {
  TransitionPairSet pairs;
  std::string source;
  if (const auto series = cfg.get("input.series")) {
    const auto stride = static_cast<std::size_t>(resolve_uint(cfg, "input.stride", 1));
    pairs = ingest_series(*series, cfg.get_double("input.sample_dt"), stride);
    source = *series;
  } else if (const auto path = cfg.get("input.path")) {
    std::ifstream in = open_input(*path);
    pairs = read_pairs(in, *path);
    source = *path;
  } else {
    throw UsageError("estimate needs --input PAIRS.csv or --series SERIES.csv");
  }
  outputs.inputs.push_back(source);
  const BinGrid grid = resolve_grid(cfg);
  const bool centered = resolve_bool(cfg, "estimate.centered", false);
  const BinnedEstimate est = centered ? estimate_centered(pairs, grid) : estimate(pairs, grid);
  Sink sink(out_path, out);
  write_estimate(sink.stream(), est, {{"source", source}, {"pairs", std::to_string(pairs.pairs.size())}});
  sink.close(outputs);
}

// ---- fit --------------------------------------------------------------------

json fit_json(const PolynomialFit& f) {
  json d = json::object();
  d["rss"] = f.diagnostics.rss;
  d["iterations"] = f.diagnostics.iterations;
  d["points_used"] = f.diagnostics.points_used;
  d["lambda_from_cv"] = f.diagnostics.lambda_from_cv;
  if (f.method.kind == FitKind::kLasso) d["kkt_violation"] = f.diagnostics.kkt_violation;
  if (f.diagnostics.lambda_from_cv) {
    d["cv_lambdas"] = f.diagnostics.cv_lambdas;
    json errs = json::array();
    for (double e : f.diagnostics.cv_errors) {
      errs.push_back(std::isfinite(e) ? json(e) : json(nullptr));
    }
    d["cv_errors"] = errs;
  }
  json j = json::object();
  j["method"] = std::string(to_string(f.method.kind));
  j["lambda"] = f.method.lambda ? json(*f.method.lambda) : json(nullptr);
  j["degree"] = f.degree;
  j["coefficients"] = f.coefficients;
  j["diagnostics"] = d;
  return j;
}

void cmd_fit(Config& cfg, const std::string& out_path, std::ostream& out, Outputs& outputs) {
  const auto path = cfg.get("input.path");
  if (!path) throw UsageError("fit needs --input ESTIMATE.csv");
  outputs.inputs.push_back(*path);
  std::ifstream in = open_input(*path);
  const BinnedEstimate est = read_estimate(in, *path);
  const PipelineOptions options = fit_options_from_config(cfg);
  std::optional<PolynomialTruth> truth;
  if (const auto name = cfg.get("fit.truth_model")) {
    truth = polynomial_truth(*name, resolve_params(cfg, *name));
    if (!truth) throw ConfigError("no polynomial truth for model '" + *name + "'");
  }
  const PipelineResult r = fit_pipeline(est, truth, options);
  json doc = json::object();
  doc["input"] = *path;
  doc["min_count"] = options.min_count;
  doc["intercept_penalized"] = false;
  doc["drift"] = fit_json(r.drift);
  doc["diffusion"] = fit_json(r.diff2);
  if (truth) {
    doc["truth"] = {{"drift", truth->drift}, {"diffusion", truth->diff2}};
    doc["abs_error"] = {{"drift", r.drift_abs_error}, {"diffusion", r.diff2_abs_error}};
  }
  Sink sink(out_path, out);
  sink.stream() << doc.dump(2) << '\n';
  sink.close(outputs);
}

// ---- mse / sweep ------------------------------------------------------------

json cell_json(const CellReport& c) {
  return {{"M", c.cell.m},         {"dt", c.cell.dt_obs},       {"dx", c.cell.dx},
          {"nb", c.cell.nb},       {"mse_drift", c.mse_drift},  {"se_drift", c.se_drift},
          {"mse_diff", c.mse_diff}, {"se_diff", c.se_diff},     {"gen_seconds", c.gen_seconds},
          {"steps", c.steps},      {"realizations", c.realizations}, {"excluded", c.excluded}};
}

json provenance_json(const ExperimentConfig& e) {
  return {{"tool_version", KMEST_VERSION},
          {"seed", e.seed},
          {"scheme", std::string(to_string(e.scheme))},
          {"dt_int", e.dt_int},
          {"mc", e.mc},
          {"workers", e.workers},
          {"seed_rule", "derive_seed(seed, hash(M, dt, finest nb), realization)"}};
}

void cmd_experiment(Config& cfg, bool sweep, const std::string& out_path,
                    const std::string& summary_path, std::ostream& out, Outputs& outputs) {
  if (sweep) {
    const std::string regime = resolve(cfg, "experiment.regime", "dxdt_sweep");
    if (regime != "dxdt_sweep") throw ConfigError("sweep needs experiment.regime = dxdt_sweep");
  }
  ExperimentConfig e = experiment_from_config(cfg);
  const bool doubling = sweep && resolve_bool(cfg, "experiment.doubling", false);
  json summary = json::object();
  summary["subcommand"] = sweep ? "sweep" : "mse";
  summary["config"] = json::object();
  summary["provenance"] = provenance_json(e);
  Sink sink(out_path, out);
  if (doubling) {
    const DoublingReport d = run_m_doubling(e, e.m, 2 * e.m);
    MSEReport both = d.at_m1;
    both.cells.insert(both.cells.end(), d.at_m2.cells.begin(), d.at_m2.cells.end());
    write_mse(sink.stream(), both);
    json cells = json::array();
    for (const CellReport& c : both.cells) cells.push_back(cell_json(c));
    summary["cells"] = cells;
    json ratios = json::array();
    for (const DoublingCell& c : d.cells) {
      ratios.push_back({{"dt", c.cell.dt_obs},
                        {"dx", c.cell.dx},
                        {"drift_ratio", c.drift_degenerate ? json("degenerate") : json(c.drift_ratio)},
                        {"diff_ratio", c.diff_degenerate ? json("degenerate") : json(c.diff_ratio)}});
    }
    summary["doubling"] = {{"M1", e.m}, {"M2", 2 * e.m}, {"cells", ratios}};
  } else {
    const MSEReport report = run_mse(e);
    write_mse(sink.stream(), report);
    json cells = json::array();
    for (const CellReport& c : report.cells) cells.push_back(cell_json(c));
    summary["cells"] = cells;
  }
  sink.close(outputs);
  summary["config"] = config_json(cfg);
  std::string target = summary_path;
  if (target.empty() && !out_path.empty()) target = out_path + ".summary.json";
  if (!target.empty()) write_json_file(target, summary, outputs);
}

// ---- verify-integrals -------------------------------------------------------

void cmd_verify(Config& cfg, const std::string& out_path, std::ostream& out, Outputs& outputs) {
  const double dt = resolve_double(cfg, "integrals.dt", 0.01);
  const auto n = static_cast<std::size_t>(resolve_uint(cfg, "integrals.n", 1000000));
  Rng rng(require_seed(cfg));
  struct Row {
    const char* spec;
    double analytic;
  };
  const double dt2 = dt * dt;
  const std::vector<Row> rows{
      {"I1", 0.0},           {"I1^2", dt},           {"I1^4", 3.0 * dt2},
      {"I10", 0.0},          {"I1*I10", dt2 / 2.0},  {"I10^2", dt2 * dt / 3.0},
      {"I01^2", dt2 * dt / 3.0}, {"I11", 0.0},       {"I11^2", dt2 / 2.0},
      {"I111", 0.0},         {"I1*I11", 0.0},        {"I11*I01", 0.0},
      {"I11*I10", 0.0},      {"I11^4", 3.75 * dt2 * dt2}};
  std::vector<MomentSpec> specs;
  for (const Row& r : rows) specs.push_back(MomentSpec::parse(r.spec));
  const std::vector<MomentEstimate> est = estimate_moments(specs, dt, n, rng);
  Sink sink(out_path, out);
  std::ostream& s = sink.stream();
  char line[160];
  std::snprintf(line, sizeof line, "# dt = %.6g, n = %zu\n", dt, n);
  s << line;
  std::snprintf(line, sizeof line, "%-10s %5s %15s %15s %12s %8s %s\n", "moment", "n(a)",
                "analytic", "measured", "std_err", "z", "status");
  s << line;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double z = est[i].standard_error > 0.0
                         ? (est[i].mean - rows[i].analytic) / est[i].standard_error
                         : 0.0;
    std::snprintf(line, sizeof line, "%-10s %5d %15.6e %15.6e %12.3e %8.2f %s\n", rows[i].spec,
                  specs[i].total_ones(), rows[i].analytic, est[i].mean, est[i].standard_error,
                  z, std::abs(z) <= 3.0 ? "ok" : "CHECK");
    s << line;
  }
  sink.close(outputs);
}

// ---- manifest ---------------------------------------------------------------

Config config_from_manifest(const std::string& path, const std::string& subcommand) {
  std::ifstream in = open_input(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("manifest '" + path + "' is not valid JSON: " + e.what());
  }
  if (!doc.contains("config") || !doc["config"].is_object()) {
    throw ConfigError("manifest '" + path + "' has no config object");
  }
  if (doc.value("subcommand", "") != subcommand) {
    throw ConfigError("manifest '" + path + "' was written by '" +
                      doc.value("subcommand", std::string("?")) + "', not '" + subcommand + "'");
  }
  Config cfg;
  for (const auto& [k, v] : doc["config"].items()) {
    if (!v.is_string()) throw ConfigError("manifest config values must be strings");
    cfg.set(k, v.get<std::string>());
  }
  return cfg;
}

struct FlagBinding {
  CLI::Option* option;
  std::string key;
  std::string* value;
};

}  // namespace

ExperimentConfig experiment_from_config(Config& cfg) {
  ExperimentConfig e;
  e.model = resolve(cfg, "model.name", "cubic");
  e.params = resolve_params(cfg, e.model);
  e.half_width = resolve_double(cfg, "grid.L", 0.5);
  if (cfg.has("grid.dx")) {
    e.nb_list.clear();
    for (double dx : cfg.get_doubles("grid.dx")) {
      const double nb = 2.0 * e.half_width / dx;
      if (!(dx > 0.0) || std::abs(nb - std::round(nb)) > 1e-9 * nb) {
        throw ConfigError("grid.dx entries must divide 2L into whole bins");
      }
      e.nb_list.push_back(static_cast<std::size_t>(std::round(nb)));
    }
  } else {
    if (!cfg.has("grid.nb")) cfg.set("grid.nb", "10");
    e.nb_list = cfg.get_sizes("grid.nb");
  }
  e.regime = parse_regime(resolve(cfg, "experiment.regime", "mdt_const"));
  switch (e.regime) {
    case Regime::kMdtConst:
      e.m_dt = cfg.get_count_real_pairs("experiment.m_dt");
      if (e.m_dt.empty()) throw ConfigError("mdt_const needs experiment.m_dt = M:dt, ...");
      break;
    case Regime::kMdtInf:
      e.dt = resolve_double(cfg, "experiment.dt", 0.01);
      e.m_list = cfg.get_sizes("experiment.m");
      if (e.m_list.empty()) throw ConfigError("mdt_inf needs experiment.m = M1, M2, ...");
      break;
    case Regime::kDxDtSweep:
      e.dt_list = cfg.get_doubles("experiment.dts");
      if (e.dt_list.empty()) throw ConfigError("dxdt_sweep needs experiment.dts = dt1, ...");
      e.m = static_cast<std::size_t>(resolve_uint(cfg, "experiment.m", 500));
      break;
  }
  e.mc = static_cast<std::size_t>(resolve_uint(cfg, "experiment.mc", 100));
  e.share_trajectories = resolve_bool(cfg, "experiment.share_trajectories", true);
  e.max_excluded_fraction = resolve_double(cfg, "experiment.max_excluded_fraction", 0.01);
  const SimulationConfig sim = resolve_simulation(cfg);
  e.scheme = sim.scheme;
  e.dt_int = sim.dt_int;
  e.burn_in = sim.burn_in;
  e.x0 = sim.x0;
  e.max_steps = cfg.has("sim.max_steps") ? sim.max_steps : e.max_steps;
  cfg.set("sim.max_steps", std::to_string(e.max_steps));
  e.seed = require_seed(cfg);
  e.workers = static_cast<std::size_t>(resolve_uint(cfg, "workers", 1));
  return e;
}

PipelineOptions fit_options_from_config(Config& cfg) {
  PipelineOptions p;
  p.fit.degree = static_cast<int>(resolve_uint(cfg, "fit.degree", 7));
  p.fit.method.kind = parse_fit_kind(resolve(cfg, "fit.method", "lasso"));
  if (const auto l = cfg.get_double("fit.lambda")) p.fit.method.lambda = *l;
  p.fit.cv_folds = static_cast<std::size_t>(resolve_uint(cfg, "fit.folds", 5));
  p.fit.cv_grid_size = static_cast<std::size_t>(resolve_uint(cfg, "fit.grid_size", 25));
  p.min_count = static_cast<std::size_t>(resolve_uint(cfg, "fit.min_count", 200));
  if (const auto b = cfg.get_uint("fit.min_bins")) p.min_bins = static_cast<std::size_t>(*b);
  return p;
}

void check_known_keys(const Config& cfg) {
  static const std::vector<std::string> known{
      "seed", "workers", "model.name", "sim.scheme", "sim.dt_int", "sim.burn_in", "sim.x0",
      "sim.max_steps", "grid.L", "grid.nb", "grid.dx", "grid.lo", "grid.hi",
      "simulate.dt_obs", "simulate.format", "simulate.samples", "simulate.stop",
      "simulate.count", "simulate.per_bin", "input.path", "input.series", "input.sample_dt",
      "input.stride", "estimate.centered", "fit.degree", "fit.method", "fit.lambda",
      "fit.folds", "fit.grid_size", "fit.min_count", "fit.min_bins", "fit.truth_model",
      "experiment.regime", "experiment.m_dt", "experiment.dt", "experiment.m",
      "experiment.dts", "experiment.mc", "experiment.share_trajectories",
      "experiment.max_excluded_fraction", "experiment.doubling", "integrals.dt",
      "integrals.n"};
  for (const auto& [key, value] : cfg.entries()) {
    if (key.rfind("model.params.", 0) == 0) continue;
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"kmest: drift and diffusion estimation for 1-D SDEs"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", KMEST_VERSION);

  std::string config_path;
  std::string manifest_in;
  std::string out_path;
  std::string manifest_out;
  std::string summary_path;
  std::vector<std::string> sets;
  std::vector<std::string> params;
  std::deque<std::string> storage;
  std::vector<FlagBinding> bindings;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value configuration file");
    sub->add_option("--from-manifest", manifest_in, "replay the configuration of a manifest")
        ->excludes(sub->get_option("--config"));
    sub->add_option("--set", sets, "override a config key (key=value)");
    sub->add_option("--out", out_path, "output file (default stdout)");
    sub->add_option("--manifest", manifest_out, "manifest path (default OUT.manifest.json)");
  };
  auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key,
                  const std::string& help) {
    std::string& slot = storage.emplace_back();
    bindings.push_back({sub->add_option(name, slot, help), key, &slot});
  };

  CLI::App* simulate = app.add_subcommand("simulate", "simulate a trajectory, write pairs or a series");
  common(simulate);
  CLI::App* est = app.add_subcommand("estimate", "binned drift and diffusion estimates");
  common(est);
  CLI::App* mse = app.add_subcommand("mse", "Monte-Carlo MSE experiment");
  common(mse);
  CLI::App* sweep = app.add_subcommand("sweep", "dt-dx sweep, optionally with M doubling");
  common(sweep);
  CLI::App* fit = app.add_subcommand("fit", "polynomial fits to an estimate CSV");
  common(fit);
  CLI::App* verify = app.add_subcommand("verify-integrals", "moment table of the step integrals");
  common(verify);

  for (CLI::App* sub : {simulate, mse, sweep}) {
    flag(sub, "--model", "model.name", "cubic, dw_additive, dw_multiplicative or ou");
    sub->add_option("--param", params, "model parameter (name=value)");
    flag(sub, "--scheme", "sim.scheme", "euler, milstein or strong15");
    flag(sub, "--dt-int", "sim.dt_int", "integration step");
    flag(sub, "--burn-in", "sim.burn_in", "burn-in time");
    flag(sub, "--x0", "sim.x0", "initial state");
    flag(sub, "--max-steps", "sim.max_steps", "step budget");
  }
  for (CLI::App* sub : {simulate, mse, sweep, verify}) flag(sub, "--seed", "seed", "global seed");
  for (CLI::App* sub : {mse, sweep}) {
    flag(sub, "--workers", "workers", "worker threads");
    flag(sub, "--mc", "experiment.mc", "Monte-Carlo realizations per cell");
    sub->add_option("--summary", summary_path, "JSON summary path (default OUT.summary.json)");
  }
  for (CLI::App* sub : {simulate, est}) {
    flag(sub, "--L", "grid.L", "grid half-width");
    flag(sub, "--nb", "grid.nb", "number of bins");
  }
  flag(simulate, "--dt-obs", "simulate.dt_obs", "observation step");
  flag(simulate, "--format", "simulate.format", "pairs or series");
  flag(simulate, "--count", "simulate.count", "number of pairs (stop=count)");
  flag(simulate, "--per-bin", "simulate.per_bin", "pairs per bin (stop=per_bin)");
  flag(simulate, "--stop", "simulate.stop", "count or per_bin");
  flag(simulate, "--samples", "simulate.samples", "series length (format=series)");
  flag(est, "--input", "input.path", "pair CSV");
  flag(est, "--series", "input.series", "series CSV (value or time,value)");
  flag(est, "--sample-dt", "input.sample_dt", "series sample spacing");
  flag(est, "--stride", "input.stride", "samples between pair members");
  flag(est, "--lo", "grid.lo", "grid lower edge");
  flag(est, "--hi", "grid.hi", "grid upper edge");
  bool centered = false;
  est->add_flag("--centered", centered, "centered drift estimator");
  flag(fit, "--input", "input.path", "estimate CSV");
  flag(fit, "--degree", "fit.degree", "polynomial degree");
  flag(fit, "--method", "fit.method", "ols, ridge or lasso");
  flag(fit, "--lambda", "fit.lambda", "penalty (lasso default: cross-validated)");
  flag(fit, "--min-count", "fit.min_count", "drop bins with fewer pairs");
  flag(fit, "--truth", "fit.truth_model", "built-in model for coefficient errors");
  flag(sweep, "--doubling", "experiment.doubling", "also run 2M and report ratios (true/false)");
  flag(verify, "--dt", "integrals.dt", "step length");
  flag(verify, "--n", "integrals.n", "samples");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  const auto started = std::chrono::steady_clock::now();
  CLI::App* chosen = nullptr;
  std::string chosen_name = "kmest";
  try {
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }
    chosen = app.get_subcommands().front();
    chosen_name = chosen->get_name();

    Config cfg;
    if (!manifest_in.empty()) {
      cfg = config_from_manifest(manifest_in, chosen_name);
    } else if (!config_path.empty()) {
      cfg = Config::load(config_path);
    }
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const std::string& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw UsageError("--param expects name=value, got '" + p + "'");
      cfg.set("model.params." + p.substr(0, eq), p.substr(eq + 1));
    }
    for (const FlagBinding& b : bindings) {
      if (b.option->count() > 0) cfg.set(b.key, *b.value);
    }
    if (centered) {
      cfg.set("estimate.centered", "true");
    }
    check_known_keys(cfg);

    Outputs outputs;
    if (chosen == simulate) {
      cmd_simulate(cfg, out_path, out, outputs);
    } else if (chosen == est) {
      cmd_estimate(cfg, out_path, out, outputs);
    } else if (chosen == fit) {
      cmd_fit(cfg, out_path, out, outputs);
    } else if (chosen == mse || chosen == sweep) {
      cmd_experiment(cfg, chosen == sweep, out_path, summary_path, out, outputs);
    } else {
      cmd_verify(cfg, out_path, out, outputs);
    }

    std::string manifest_path = manifest_out;
    if (manifest_path.empty() && !out_path.empty()) manifest_path = out_path + ".manifest.json";
    if (!manifest_path.empty()) {
      json m = json::object();
      m["tool"] = "kmest";
      m["version"] = KMEST_VERSION;
      m["subcommand"] = chosen_name;
      m["seed"] = cfg.has("seed") ? json(*cfg.get_uint("seed")) : json(nullptr);
      m["config"] = config_json(cfg);
      m["inputs"] = outputs.inputs;
      m["outputs"] = outputs.files;
      m["wall_seconds"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      std::ofstream f = open_output(manifest_path);
      f << m.dump(2) << '\n';
      if (!f) throw IoError("failed writing manifest '" + manifest_path + "'");
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << json{{"error", {{"code", "usage"}, {"exit_status", kExitUsage},
                           {"subcommand", chosen_name}, {"message", e.what()}}}}
               .dump()
        << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    const int status = static_cast<int>(e.code());
    json rec = {{"code", to_string(e.code())}, {"exit_status", status},
                {"subcommand", chosen_name}, {"message", e.what()}};
    if (const auto* s = dynamic_cast<const StarvationError*>(&e)) {
      rec["starving_bins"] = s->starving_bins();
      rec["starving_counts"] = s->starving_counts();
    }
    err << json{{"error", rec}}.dump() << '\n';
    return status;
  } catch (const std::exception& e) {
    err << json{{"error", {{"code", "internal"}, {"exit_status", kExitInternal},
                           {"subcommand", chosen_name}, {"message", e.what()}}}}
               .dump()
        << '\n';
    return kExitInternal;
  }
}

}  // namespace kmest::cli
