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

#include <ostream>
#include <string>
#include <vector>

#include "kmest/config.hpp"
#include "kmest/experiment.hpp"
#include "kmest/regression.hpp"

namespace kmest::cli {

/// Exit statuses besides the ErrorCode values.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 64;
inline constexpr int kExitInternal = 70;

/// Runs one command line (args[0] is the program name). Regular output goes
/// to `out` unless redirected with --out; a JSON error record goes to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Builds an experiment from `model.*`, `grid.*`, `sim.*`, `experiment.*`,
/// `seed` and `workers`, writing every defaulted key back into `cfg` so the
/// resolved configuration can be echoed.
ExperimentConfig experiment_from_config(Config& cfg);

/// Fit settings from `fit.*` (same defaulting rule).
PipelineOptions fit_options_from_config(Config& cfg);

/// Throws ConfigError for keys outside the documented schema.
void check_known_keys(const Config& cfg);

}  // namespace kmest::cli
