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
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kmest/binning.hpp"
#include "kmest/experiment.hpp"
#include "kmest/integrators.hpp"

namespace kmest {

/// `# key: value` comment lines preceding a CSV header.
using CsvMetadata = std::vector<std::pair<std::string, std::string>>;

/// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double value);

// Pair CSV: header x_start,x_end.
void write_pairs(std::ostream& out, const TransitionPairSet& pairs);
TransitionPairSet read_pairs(std::istream& in, const std::string& source = "<pairs>");

// Estimate CSV: header x_k,count,drift_hat,diff2_hat; empty bins have empty
// value fields. The grid is carried in the metadata.
void write_estimate(std::ostream& out, const BinnedEstimate& estimate,
                    const CsvMetadata& extra = {});
BinnedEstimate read_estimate(std::istream& in, const std::string& source = "<estimate>");

// MSE CSV: header M,dt,dx,mse_drift,se_drift,mse_diff,se_diff,gen_seconds.
void write_mse(std::ostream& out, const MSEReport& report);

struct MseRow {
  std::size_t m = 0;
  double dt = 0.0;
  double dx = 0.0;
  double mse_drift = 0.0;
  double se_drift = 0.0;
  double mse_diff = 0.0;
  double se_diff = 0.0;
  double gen_seconds = 0.0;
};
std::vector<MseRow> read_mse(std::istream& in, const std::string& source = "<mse>");

/// Single-column value series, optionally timed (two columns time,value).
void write_series(std::ostream& out, std::span<const double> values,
                  std::optional<double> sample_dt = std::nullopt);

struct Series {
  std::vector<double> values;
  /// Sample spacing from the time column, if present.
  std::optional<double> sample_dt;
};

/// Throws InvalidArgument naming the line for non-finite values or
/// non-uniform timestamps, IoError for unparsable rows.
Series read_series(std::istream& in, const std::string& source = "<series>");

/// Disjoint pairs (u[2 s j], u[2 s j + s]) so no sample is used twice.
/// pair_dt is the time between the two members of a pair.
TransitionPairSet pairs_from_series(std::span<const double> values, double pair_dt,
                                    std::size_t stride);

/// Reads a series file and cuts it into pairs separated by `stride` samples.
/// For untimed files sample_dt is required; for timed files it is optional
/// and must agree with the timestamps.
TransitionPairSet ingest_series(const std::filesystem::path& path,
                                std::optional<double> sample_dt, std::size_t stride);

// File helpers that map stream failures to IoError.
std::ifstream open_input(const std::filesystem::path& path);
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace kmest
