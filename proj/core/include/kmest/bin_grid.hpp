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
#include <optional>
#include <vector>

#include "kmest/sde_model.hpp"

namespace kmest {

/// Uniform partition of [lo, hi] into nb bins of width dx.
///
/// Bins are half-open [x_k - dx/2, x_k + dx/2) except the last, which is
/// closed on the right, so every point of [lo, hi] has exactly one bin.
class BinGrid {
 public:
  BinGrid(double lo, double hi, std::size_t nb);

  std::size_t size() const noexcept { return nb_; }
  double width() const noexcept { return width_; }
  const Interval& interval() const noexcept { return interval_; }
  double center(std::size_t k) const noexcept {
    return interval_.lo + (static_cast<double>(k) + 0.5) * width_;
  }
  std::vector<double> centers() const;
  Interval bin(std::size_t k) const noexcept {
    return {interval_.lo + static_cast<double>(k) * width_,
            k + 1 == nb_ ? interval_.hi
                         : interval_.lo + static_cast<double>(k + 1) * width_};
  }

  std::optional<std::size_t> assign(double x) const noexcept {
    if (!(x >= interval_.lo && x <= interval_.hi)) return std::nullopt;
    auto k = static_cast<std::size_t>((x - interval_.lo) / width_);
    if (k >= nb_) return nb_ - 1;
    // Floating-point division can land one bin off near an edge.
    if (x < bin(k).lo) return k - 1;
    if (k + 1 < nb_ && x >= bin(k + 1).lo) return k + 1;
    return k;
  }

 private:
  Interval interval_;
  std::size_t nb_;
  double width_;
};

/// Symmetric grid on [-L, L] with nb bins (dx = 2L / nb).
BinGrid make_grid(double half_width, std::size_t nb);

/// Grid on an arbitrary interval [lo, hi].
BinGrid make_grid(Interval interval, std::size_t nb);

inline std::optional<std::size_t> assign_bin(double x, const BinGrid& grid) noexcept {
  return grid.assign(x);
}

}  // namespace kmest
