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

#include <stdexcept>
#include <string>
#include <vector>
#include <cstddef>

namespace kmest {

/// Error categories. The CLI maps each one to a distinct exit status.
enum class ErrorCode {
  kInvalidArgument = 2,
  kMalformedConfig = 3,
  kIo = 4,
  kDivergence = 5,
  kStarvation = 6,
  kNumerical = 7,
  kConvergence = 8,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorCode::kInvalidArgument, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCode::kMalformedConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

/// A trajectory left the finite range |x| <= divergence bound.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time)
      : Error(ErrorCode::kDivergence, what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Fixed-per-bin collection ran out of its step budget.
class StarvationError : public Error {
 public:
  StarvationError(const std::string& what, std::vector<std::size_t> bins,
                  std::vector<std::size_t> counts)
      : Error(ErrorCode::kStarvation, what),
        bins_(std::move(bins)),
        counts_(std::move(counts)) {}

  /// Indices of the bins that did not reach their quota.
  const std::vector<std::size_t>& starving_bins() const noexcept { return bins_; }
  /// Counts reached by those bins, parallel to starving_bins().
  const std::vector<std::size_t>& starving_counts() const noexcept { return counts_; }

 private:
  std::vector<std::size_t> bins_;
  std::vector<std::size_t> counts_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorCode::kNumerical, what) {}
};

class ConvergenceError : public Error {
 public:
  explicit ConvergenceError(const std::string& what)
      : Error(ErrorCode::kConvergence, what) {}
};

}  // namespace kmest
