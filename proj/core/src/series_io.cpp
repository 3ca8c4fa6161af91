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

#include "kmest/series_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "kmest/error.hpp"

namespace kmest {

std::string format_double(double value) {
  // Shortest text that parses back to the same double.
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::optional<double> parse_double(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return v;
}

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// Comment metadata, header and data rows of a CSV stream.
struct Table {
  CsvMetadata metadata;
  std::vector<std::string> header;
  std::vector<Row> rows;

  std::optional<std::string> meta(std::string_view key) const {
    for (const auto& [k, v] : metadata) {
      if (k == key) return v;
    }
    return std::nullopt;
  }
};

Table read_table(std::istream& in, const std::string& source, bool expect_header) {
  Table t;
  std::string line;
  std::size_t number = 0;
  bool have_header = !expect_header;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      const std::string text = trim(std::string_view(body).substr(1));
      const auto colon = text.find(':');
      if (colon != std::string::npos) {
        t.metadata.emplace_back(trim(text.substr(0, colon)), trim(text.substr(colon + 1)));
      }
      continue;
    }
    if (!have_header) {
      t.header = split(body);
      have_header = true;
      continue;
    }
    t.rows.push_back({number, split(body)});
  }
  if (in.bad()) throw IoError("failed reading " + source);
  if (!have_header) throw IoError(source + ": missing CSV header");
  return t;
}

void expect_header(const Table& t, const std::vector<std::string>& want,
                   const std::string& source) {
  if (t.header != want) {
    std::string joined;
    for (const auto& w : want) joined += (joined.empty() ? "" : ",") + w;
    throw IoError(source + ": expected CSV header '" + joined + "'");
  }
}

[[noreturn]] void bad_row(const std::string& source, std::size_t line, const std::string& why) {
  throw IoError(source + ":" + std::to_string(line) + ": " + why);
}

double field_double(const Row& row, std::size_t i, const std::string& source) {
  const auto v = parse_double(row.fields[i]);
  if (!v) bad_row(source, row.line, "cannot parse '" + row.fields[i] + "' as a number");
  return *v;
}

std::size_t field_count(const Row& row, std::size_t i, const std::string& source) {
  std::size_t v = 0;
  const std::string& f = row.fields[i];
  const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc() || ptr != f.data() + f.size() || f.empty()) {
    bad_row(source, row.line, "cannot parse '" + f + "' as a count");
  }
  return v;
}

void check_width(const Row& row, std::size_t n, const std::string& source) {
  if (row.fields.size() != n) {
    bad_row(source, row.line,
            "expected " + std::to_string(n) + " fields, got " + std::to_string(row.fields.size()));
  }
}

double meta_double(const Table& t, std::string_view key, const std::string& source) {
  const auto v = t.meta(key);
  if (!v) throw IoError(source + ": missing metadata '# " + std::string(key) + ": ...'");
  const auto d = parse_double(*v);
  if (!d) throw IoError(source + ": metadata '" + std::string(key) + "' is not a number");
  return *d;
}

void write_meta(std::ostream& out, const std::string& key, const std::string& value) {
  out << "# " << key << ": " << value << '\n';
}

}  // namespace

void write_pairs(std::ostream& out, const TransitionPairSet& pairs) {
  write_meta(out, "model", pairs.model_name);
  write_meta(out, "dt_obs", format_double(pairs.dt_obs));
  write_meta(out, "dt_int", format_double(pairs.dt_int));
  write_meta(out, "scheme", std::string(to_string(pairs.scheme)));
  write_meta(out, "seed", std::to_string(pairs.seed));
  write_meta(out, "steps", std::to_string(pairs.steps));
  out << "x_start,x_end\n";
  for (const TransitionPair& p : pairs.pairs) {
    out << format_double(p.x_start) << ',' << format_double(p.x_end) << '\n';
  }
  if (!out) throw IoError("failed writing pair CSV");
}

TransitionPairSet read_pairs(std::istream& in, const std::string& source) {
  const Table t = read_table(in, source, true);
  expect_header(t, {"x_start", "x_end"}, source);
  TransitionPairSet out;
  out.dt_obs = meta_double(t, "dt_obs", source);
  if (!(out.dt_obs > 0.0)) throw InvalidArgument(source + ": dt_obs must be > 0");
  out.model_name = t.meta("model").value_or("");
  if (const auto v = t.meta("dt_int")) out.dt_int = parse_double(*v).value_or(0.0);
  if (const auto v = t.meta("scheme")) out.scheme = parse_scheme(*v);
  if (const auto v = t.meta("seed")) out.seed = std::stoull(*v);
  if (const auto v = t.meta("steps")) out.steps = std::stoull(*v);
  out.pairs.reserve(t.rows.size());
  for (const Row& row : t.rows) {
    check_width(row, 2, source);
    const double a = field_double(row, 0, source);
    const double b = field_double(row, 1, source);
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw InvalidArgument(source + ":" + std::to_string(row.line) + ": non-finite value");
    }
    out.pairs.push_back({a, b});
  }
  return out;
}

void write_estimate(std::ostream& out, const BinnedEstimate& est, const CsvMetadata& extra) {
  write_meta(out, "dt_obs", format_double(est.dt_obs));
  write_meta(out, "grid_lo", format_double(est.grid.interval().lo));
  write_meta(out, "grid_hi", format_double(est.grid.interval().hi));
  write_meta(out, "nb", std::to_string(est.grid.size()));
  write_meta(out, "estimator", est.has_diffusion ? "plain" : "centered");
  for (const auto& [k, v] : extra) write_meta(out, k, v);
  out << "x_k,count,drift_hat,diff2_hat\n";
  for (std::size_t k = 0; k < est.grid.size(); ++k) {
    out << format_double(est.grid.center(k)) << ',' << est.counts[k] << ',';
    if (!est.empty(k)) {
      out << format_double(est.drift_hat[k]) << ',';
      if (est.has_diffusion) out << format_double(est.diff2_hat[k]);
    } else {
      out << ',';
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing estimate CSV");
}

BinnedEstimate read_estimate(std::istream& in, const std::string& source) {
  const Table t = read_table(in, source, true);
  expect_header(t, {"x_k", "count", "drift_hat", "diff2_hat"}, source);
  if (t.rows.empty()) throw InvalidArgument(source + ": estimate has no bins");
  std::vector<double> xs;
  for (const Row& row : t.rows) {
    check_width(row, 4, source);
    xs.push_back(field_double(row, 0, source));
  }
  double lo = 0.0;
  double hi = 0.0;
  if (t.meta("grid_lo") && t.meta("grid_hi")) {
    lo = meta_double(t, "grid_lo", source);
    hi = meta_double(t, "grid_hi", source);
  } else {
    // Uniform centers: recover the tiling from the first and last center.
    const double dx = xs.size() > 1 ? (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1)
                                    : 0.0;
    if (!(dx > 0.0)) throw InvalidArgument(source + ": cannot infer bin width");
    lo = xs.front() - 0.5 * dx;
    hi = xs.back() + 0.5 * dx;
  }
  BinnedEstimate est(BinGrid(lo, hi, t.rows.size()), meta_double(t, "dt_obs", source));
  est.has_diffusion = t.meta("estimator").value_or("plain") != "centered";
  const std::size_t nb = t.rows.size();
  for (std::size_t k = 0; k < nb; ++k) {
    const Row& row = t.rows[k];
    if (std::abs(xs[k] - est.grid.center(k)) > 1e-9 * (1.0 + std::abs(xs[k]))) {
      bad_row(source, row.line, "bin center does not match the grid");
    }
    est.counts[k] = field_count(row, 1, source);
    if (est.counts[k] == 0) continue;
    est.drift_hat[k] = field_double(row, 2, source);
    if (est.has_diffusion) est.diff2_hat[k] = field_double(row, 3, source);
  }
  return est;
}

void write_mse(std::ostream& out, const MSEReport& report) {
  const ExperimentConfig& c = report.config;
  write_meta(out, "model", c.custom_model ? c.custom_model->name() : c.model);
  write_meta(out, "regime", std::string(to_string(c.regime)));
  write_meta(out, "mc", std::to_string(c.mc));
  write_meta(out, "seed", std::to_string(c.seed));
  write_meta(out, "scheme", std::string(to_string(c.scheme)));
  write_meta(out, "dt_int", format_double(c.dt_int));
  write_meta(out, "L", format_double(c.half_width));
  out << "M,dt,dx,mse_drift,se_drift,mse_diff,se_diff,gen_seconds\n";
  for (const CellReport& r : report.cells) {
    out << r.cell.m << ',' << format_double(r.cell.dt_obs) << ',' << format_double(r.cell.dx)
        << ',' << format_double(r.mse_drift) << ',' << format_double(r.se_drift) << ','
        << format_double(r.mse_diff) << ',' << format_double(r.se_diff) << ','
        << format_double(r.gen_seconds) << '\n';
  }
  if (!out) throw IoError("failed writing MSE CSV");
}

std::vector<MseRow> read_mse(std::istream& in, const std::string& source) {
  const Table t = read_table(in, source, true);
  expect_header(t, {"M", "dt", "dx", "mse_drift", "se_drift", "mse_diff", "se_diff",
                    "gen_seconds"},
                source);
  std::vector<MseRow> rows;
  for (const Row& row : t.rows) {
    check_width(row, 8, source);
    rows.push_back({field_count(row, 0, source), field_double(row, 1, source),
                    field_double(row, 2, source), field_double(row, 3, source),
                    field_double(row, 4, source), field_double(row, 5, source),
                    field_double(row, 6, source), field_double(row, 7, source)});
  }
  return rows;
}

void write_series(std::ostream& out, std::span<const double> values,
                  std::optional<double> sample_dt) {
  if (sample_dt) {
    out << "time,value\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
      out << format_double(static_cast<double>(i) * *sample_dt) << ','
          << format_double(values[i]) << '\n';
    }
  } else {
    out << "value\n";
    for (double v : values) out << format_double(v) << '\n';
  }
  if (!out) throw IoError("failed writing series CSV");
}

Series read_series(std::istream& in, const std::string& source) {
  Table t = read_table(in, source, false);
  // An optional non-numeric first row is a header.
  if (!t.rows.empty()) {
    const auto& first = t.rows.front().fields;
    const bool numeric = std::all_of(first.begin(), first.end(),
                                     [](const std::string& f) { return parse_double(f).has_value(); });
    if (!numeric) t.rows.erase(t.rows.begin());
  }
  if (t.rows.empty()) throw InvalidArgument(source + ": series has no samples");
  const std::size_t width = t.rows.front().fields.size();
  if (width != 1 && width != 2) {
    throw IoError(source + ": series must have one column (value) or two (time,value)");
  }
  Series s;
  std::vector<double> times;
  for (const Row& row : t.rows) {
    check_width(row, width, source);
    for (std::size_t i = 0; i < width; ++i) {
      const double v = field_double(row, i, source);
      if (!std::isfinite(v)) {
        throw InvalidArgument(source + ":" + std::to_string(row.line) + ": non-finite value '" +
                              row.fields[i] + "'");
      }
    }
    if (width == 2) times.push_back(field_double(row, 0, source));
    s.values.push_back(field_double(row, width - 1, source));
  }
  if (s.values.size() < 2) throw InvalidArgument(source + ": fewer than 2 usable samples");
  if (width == 2) {
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(dt > 0.0)) throw InvalidArgument(source + ": timestamps must increase");
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (std::abs((times[i] - times[i - 1]) - dt) > 1e-9 * dt * static_cast<double>(i + 1)) {
        throw InvalidArgument(source + ":" + std::to_string(t.rows[i].line) +
                              ": non-uniform timestamp");
      }
    }
    s.sample_dt = dt;
  }
  return s;
}

TransitionPairSet pairs_from_series(std::span<const double> values, double pair_dt,
                                    std::size_t stride) {
  if (stride == 0) throw InvalidArgument("stride must be >= 1");
  if (!(pair_dt > 0.0)) throw InvalidArgument("pair separation must be > 0");
  TransitionPairSet out;
  out.dt_obs = pair_dt;
  out.dt_int = pair_dt / static_cast<double>(stride);
  for (std::size_t i = 0; i + stride < values.size(); i += 2 * stride) {
    out.pairs.push_back({values[i], values[i + stride]});
  }
  if (out.pairs.empty()) throw InvalidArgument("series too short for one pair at this stride");
  return out;
}

TransitionPairSet ingest_series(const std::filesystem::path& path,
                                std::optional<double> sample_dt, std::size_t stride) {
  std::ifstream in = open_input(path);
  const Series s = read_series(in, path.string());
  double dt = 0.0;
  if (s.sample_dt) {
    if (sample_dt && std::abs(*sample_dt - *s.sample_dt) > 1e-9 * *s.sample_dt) {
      throw InvalidArgument(path.string() + ": timestamps imply dt " +
                            format_double(*s.sample_dt) + ", not " + format_double(*sample_dt));
    }
    dt = *s.sample_dt;
  } else {
    if (!sample_dt) throw InvalidArgument(path.string() + ": untimed series needs a sample dt");
    dt = *sample_dt;
  }
  TransitionPairSet out = pairs_from_series(s.values, dt * static_cast<double>(stride), stride);
  out.model_name = "series:" + path.filename().string();
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.precision(17);
  return out;
}

}  // namespace kmest
