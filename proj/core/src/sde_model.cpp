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

#include "kmest/sde_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "kmest/error.hpp"

namespace kmest {

SdeModel::SdeModel(std::string name, JetFn jet, Interval domain,
                   double correlation_time,
                   std::optional<DensityFunction> density)
    : name_(std::move(name)),
      jet_(std::move(jet)),
      domain_(domain),
      correlation_time_(correlation_time),
      density_(std::move(density)) {
  if (!jet_) throw InvalidArgument("SdeModel requires a coefficient callback");
  if (!(correlation_time_ > 0.0)) {
    throw InvalidArgument("SdeModel correlation time must be positive");
  }
}

ItoTaylorCoefficients ito_taylor_coefficients(const CoefficientJet& j) noexcept {
  const double d_sq = j.d * j.d;
  return {
      j.a,
      j.d,
      j.d * j.d1,
      j.a * j.d1 + 0.5 * d_sq * j.d2,
      j.d * j.a1,
      j.a * j.a1 + 0.5 * d_sq * j.a2,
      // L^1 L^1 D = D (D'^2 + D D''); the printed variant drops the square.
      j.d * (j.d1 * j.d1 + j.d * j.d2),
  };
}

namespace {

struct ModelSpec {
  std::string_view name;
  std::vector<std::string_view> params;
  ParamMap defaults;
};

const std::vector<ModelSpec>& model_specs() {
  static const std::vector<ModelSpec> specs = {
      {"cubic",
       {"gamma", "sigma1", "sigma2"},
       {{"gamma", 1.0},
        {"sigma1", 1.0 / std::numbers::sqrt2},
        {"sigma2", 1.0 / std::numbers::sqrt2}}},
      {"dw_additive",
       {"gamma", "b0", "sigma"},
       {{"gamma", 2.0}, {"b0", 0.5}, {"sigma", 0.5}}},
      {"dw_multiplicative",
       {"gamma", "b0", "sigma1", "sigma2"},
       {{"gamma", 2.0}, {"b0", 0.5}, {"sigma1", 0.5}, {"sigma2", 0.5}}},
      {"ou", {"theta", "sigma"}, {{"theta", 1.0}, {"sigma", 1.0}}},
  };
  return specs;
}

const ModelSpec& find_spec(std::string_view name) {
  for (const auto& spec : model_specs()) {
    if (spec.name == name) return spec;
  }
  throw InvalidArgument("unknown model '" + std::string(name) + "'");
}

double require(const ParamMap& params, std::string_view model,
               std::string_view key) {
  const auto it = params.find(key);
  if (it == params.end()) {
    std::ostringstream msg;
    msg << "model '" << model << "' is missing parameter '" << key << "'";
    throw InvalidArgument(msg.str());
  }
  if (!std::isfinite(it->second)) {
    std::ostringstream msg;
    msg << "model '" << model << "' parameter '" << key << "' is not finite";
    throw InvalidArgument(msg.str());
  }
  return it->second;
}

void require_positive(double value, std::string_view model, std::string_view key) {
  if (!(value > 0.0)) {
    std::ostringstream msg;
    msg << "model '" << model << "' requires " << key << " > 0 (got " << value
        << ")";
    throw InvalidArgument(msg.str());
  }
}

void require_non_negative(double value, std::string_view model,
                          std::string_view key) {
  if (value < 0.0) {
    std::ostringstream msg;
    msg << "model '" << model << "' requires " << key << " >= 0 (got " << value
        << ")";
    throw InvalidArgument(msg.str());
  }
}

SdeModel make_cubic(const ParamMap& p) {
  const double gamma = require(p, "cubic", "gamma");
  const double s1 = require(p, "cubic", "sigma1");
  const double s2 = require(p, "cubic", "sigma2");
  require_positive(gamma, "cubic", "gamma");
  require_positive(s1, "cubic", "sigma1");
  require_non_negative(s2, "cubic", "sigma2");
  Interval domain;
  if (s2 > 0.0) domain.lo = -s1 / s2;
  auto jet = [gamma, s1, s2](double x) {
    return CoefficientJet{-gamma * x * x * x, -3.0 * gamma * x * x, -6.0 * gamma * x,
                          s1 + s2 * x,        s2,                   0.0};
  };
  return SdeModel("cubic", jet, domain, 2.0);
}

CoefficientJet double_well_drift(double gamma, double b0, double x) {
  CoefficientJet j;
  j.a = -gamma * x * (x * x - b0);
  j.a1 = -gamma * (3.0 * x * x - b0);
  j.a2 = -6.0 * gamma * x;
  return j;
}

SdeModel make_dw_additive(const ParamMap& p) {
  const double gamma = require(p, "dw_additive", "gamma");
  const double b0 = require(p, "dw_additive", "b0");
  const double sigma = require(p, "dw_additive", "sigma");
  require_positive(gamma, "dw_additive", "gamma");
  require_positive(sigma, "dw_additive", "sigma");
  auto jet = [gamma, b0, sigma](double x) {
    CoefficientJet j = double_well_drift(gamma, b0, x);
    j.d = sigma;
    return j;
  };
  return SdeModel("dw_additive", jet, {}, 1.0 / (gamma * std::max(b0, 0.5)));
}

SdeModel make_dw_multiplicative(const ParamMap& p) {
  const double gamma = require(p, "dw_multiplicative", "gamma");
  const double b0 = require(p, "dw_multiplicative", "b0");
  const double s1 = require(p, "dw_multiplicative", "sigma1");
  const double s2 = require(p, "dw_multiplicative", "sigma2");
  require_positive(gamma, "dw_multiplicative", "gamma");
  require_positive(s1, "dw_multiplicative", "sigma1");
  require_non_negative(s2, "dw_multiplicative", "sigma2");
  auto jet = [gamma, b0, s1, s2](double x) {
    CoefficientJet j = double_well_drift(gamma, b0, x);
    j.d = s1 + s2 * x * x;
    j.d1 = 2.0 * s2 * x;
    j.d2 = 2.0 * s2;
    return j;
  };
  return SdeModel("dw_multiplicative", jet, {}, 1.0 / (gamma * std::max(b0, 0.5)));
}

SdeModel make_ou(const ParamMap& p) {
  const double theta = require(p, "ou", "theta");
  const double sigma = require(p, "ou", "sigma");
  require_positive(theta, "ou", "theta");
  require_positive(sigma, "ou", "sigma");
  auto jet = [theta, sigma](double x) {
    return CoefficientJet{-theta * x, -theta, 0.0, sigma, 0.0, 0.0};
  };
  const double var = sigma * sigma / (2.0 * theta);
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * var);
  DensityFunction density{
      [var, norm](double x) { return norm * std::exp(-0.5 * x * x / var); },
      [var, norm](double x) {
        return -x / var * norm * std::exp(-0.5 * x * x / var);
      },
      {}};
  return SdeModel("ou", jet, {}, 1.0 / theta, std::move(density));
}

}  // namespace

std::vector<std::string> builtin_model_names() {
  std::vector<std::string> names;
  for (const auto& spec : model_specs()) names.emplace_back(spec.name);
  return names;
}

ParamMap default_params(std::string_view name) { return find_spec(name).defaults; }

SdeModel builtin_model(std::string_view name, const ParamMap& params) {
  const ModelSpec& spec = find_spec(name);
  for (const auto& [key, value] : params) {
    bool known = false;
    for (auto p : spec.params) known = known || p == key;
    if (!known) {
      throw InvalidArgument("model '" + std::string(name) +
                            "' has no parameter '" + key + "'");
    }
  }
  if (name == "cubic") return make_cubic(params);
  if (name == "dw_additive") return make_dw_additive(params);
  if (name == "dw_multiplicative") return make_dw_multiplicative(params);
  return make_ou(params);
}

}  // namespace kmest
