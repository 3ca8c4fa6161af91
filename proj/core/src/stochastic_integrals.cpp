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

#include "kmest/stochastic_integrals.hpp"

#include <array>
#include <cctype>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "kmest/error.hpp"

namespace kmest {

namespace {

constexpr double kInvSqrt3 = 1.0 / std::numbers::sqrt3;

constexpr std::array<std::pair<IntegralId, std::string_view>, 7> kNames = {{
    {IntegralId::k111, "I111"},
    {IntegralId::k00, "I00"},
    {IntegralId::k10, "I10"},
    {IntegralId::k01, "I01"},
    {IntegralId::k11, "I11"},
    {IntegralId::k0, "I0"},
    {IntegralId::k1, "I1"},
}};

double value_of(IntegralId id, const MultipleIntegrals& m) noexcept {
  switch (id) {
    case IntegralId::k0: return m.i0;
    case IntegralId::k1: return m.i1;
    case IntegralId::k00: return m.i00;
    case IntegralId::k10: return m.i10;
    case IntegralId::k01: return m.i01;
    case IntegralId::k11: return m.i11;
    case IntegralId::k111: return m.i111;
  }
  return 0.0;
}

// Moves dz and fl(dw * dt) onto a common power-of-two grid, 4 ulp of the
// larger magnitude, so that I01 = dw * dt - dz is exact and
// fl(I01 + I10) == fl(dw * dt). Without this the sum is off by the rounding
// of the subtraction whenever |dz| > |dw * dt|. Perturbations stay within a
// few ulp, and most steps already satisfy the identity untouched.
StepNoise snap_to_parts_grid(double dw, double dz, double dt) noexcept {
  const double p0 = dw * dt;
  if ((p0 - dz) + dz == p0) return {dw, dz};
  const double m = std::max(std::abs(p0), std::abs(dz));
  if (!(m > 0.0) || !std::isfinite(m)) return {dw, dz};
  const double g = std::max(std::ldexp(1.0, std::ilogb(m) - 50),
                            std::numeric_limits<double>::denorm_min());
  const double b = std::nearbyint(dz / g) * g;
  const double target = std::nearbyint(p0 / g) * g;
  for (int k = 0; k < 16; ++k) {
    const double p = target + ((k % 2 == 0) ? 1.0 : -1.0) * static_cast<double>((k + 1) / 2) * g;
    const double w0 = p / dt;
    for (double w : {w0, std::nextafter(w0, HUGE_VAL), std::nextafter(w0, -HUGE_VAL)}) {
      if (w * dt == p) return {w, b};
    }
  }
  return {dw, dz};
}

}  // namespace

StepNoise step_noise_from_normals(double dt, double u1, double u2) noexcept {
  const double sqrt_dt = std::sqrt(dt);
  return snap_to_parts_grid(sqrt_dt * u1, 0.5 * dt * sqrt_dt * (u1 + kInvSqrt3 * u2), dt);
}

StepNoise sample_step_noise(double dt, Rng& rng) {
  if (!(dt > 0.0)) throw InvalidArgument("step noise requires dt > 0");
  const double u1 = rng.normal();
  const double u2 = rng.normal();
  return step_noise_from_normals(dt, u1, u2);
}

MultipleIntegrals derive_multiple_integrals(const StepNoise& noise, double dt) noexcept {
  const double dw = noise.dw;
  MultipleIntegrals m;
  m.i0 = dt;
  m.i1 = dw;
  m.i00 = 0.5 * dt * dt;
  m.i10 = noise.dz;
  m.i01 = dw * dt - noise.dz;
  m.i11 = 0.5 * (dw * dw - dt);
  m.i111 = (dw * dw * dw - 3.0 * dt * dw) / 6.0;
  return m;
}

std::string_view to_string(IntegralId id) noexcept {
  for (const auto& [key, name] : kNames) {
    if (key == id) return name;
  }
  return "?";
}

int count_ones(IntegralId id) noexcept {
  switch (id) {
    case IntegralId::k0:
    case IntegralId::k00: return 0;
    case IntegralId::k1:
    case IntegralId::k10:
    case IntegralId::k01: return 1;
    case IntegralId::k11: return 2;
    case IntegralId::k111: return 3;
  }
  return 0;
}

MomentSpec MomentSpec::parse(std::string_view text) {
  MomentSpec spec;
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) {
    throw InvalidArgument("bad moment spec '" + std::string(text) + "': " + why);
  };
  auto skip_space = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  skip_space();
  if (pos == text.size()) fail("empty");
  while (true) {
    skip_space();
    bool matched = false;
    for (const auto& [id, name] : kNames) {
      // kNames lists longer names first so I111 wins over I11 and I1.
      if (text.substr(pos, name.size()) == name) {
        const std::size_t end = pos + name.size();
        if (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) {
          continue;
        }
        pos = end;
        int power = 1;
        skip_space();
        if (pos < text.size() && text[pos] == '^') {
          ++pos;
          skip_space();
          const std::size_t start = pos;
          while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
          if (start == pos) fail("missing exponent");
          power = std::stoi(std::string(text.substr(start, pos - start)));
          if (power < 1) fail("exponent must be >= 1");
        }
        spec.factors.emplace_back(id, power);
        matched = true;
        break;
      }
    }
    if (!matched) fail("unknown factor at position " + std::to_string(pos));
    skip_space();
    if (pos == text.size()) break;
    if (text[pos] != '*') fail("expected '*' at position " + std::to_string(pos));
    ++pos;
  }
  return spec;
}

std::string MomentSpec::to_string() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i) out << '*';
    out << kmest::to_string(factors[i].first);
    if (factors[i].second != 1) out << '^' << factors[i].second;
  }
  return out.str();
}

int MomentSpec::total_ones() const noexcept {
  int n = 0;
  for (const auto& [id, power] : factors) n += count_ones(id) * power;
  return n;
}

double MomentSpec::evaluate(const MultipleIntegrals& integrals) const noexcept {
  double v = 1.0;
  for (const auto& [id, power] : factors) {
    const double base = value_of(id, integrals);
    for (int k = 0; k < power; ++k) v *= base;
  }
  return v;
}

std::vector<MomentEstimate> estimate_moments(const std::vector<MomentSpec>& specs,
                                             double dt, std::size_t n, Rng& rng) {
  if (n < 1000) throw InvalidArgument("moment estimation needs n >= 1000");
  if (!(dt > 0.0)) throw InvalidArgument("moment estimation needs dt > 0");
  for (const auto& s : specs) {
    if (s.factors.empty()) throw InvalidArgument("empty moment spec");
  }
  // Welford accumulation per spec.
  std::vector<double> mean(specs.size(), 0.0);
  std::vector<double> m2(specs.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const MultipleIntegrals m = derive_multiple_integrals(sample_step_noise(dt, rng), dt);
    const double count = static_cast<double>(i + 1);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      const double v = specs[k].evaluate(m);
      const double delta = v - mean[k];
      mean[k] += delta / count;
      m2[k] += delta * (v - mean[k]);
    }
  }
  std::vector<MomentEstimate> out(specs.size());
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const double var = m2[k] / (nn - 1.0);
    out[k] = {mean[k], std::sqrt(var / nn), n};
  }
  return out;
}

MomentEstimate estimate_moment(const MomentSpec& spec, double dt, std::size_t n,
                               Rng& rng) {
  return estimate_moments({spec}, dt, n, rng).front();
}

}  // namespace kmest
