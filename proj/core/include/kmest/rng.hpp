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

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>

namespace kmest {

/// splitmix64 finalizer; used to turn structured keys into engine seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for stream `index` of family `stream` under a global seed. Independent
/// of the order in which streams are requested.
std::uint64_t derive_seed(std::uint64_t global_seed, std::uint64_t stream,
                          std::uint64_t index) noexcept;

/// Sequential random stream: one per realization, never shared across threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t bits() { return engine_(); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  // Ziggurat sampler; about twice as fast as std::normal_distribution.
  boost::random::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace kmest
