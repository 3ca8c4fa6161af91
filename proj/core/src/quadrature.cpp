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

#include "kmest/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kmest/error.hpp"

namespace kmest {

namespace {

using Rule = boost::math::quadrature::gauss<double, 30>;
constexpr int kMaxDepth = 40;
constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Panel {
  double value = 0.0;
  double l1 = 0.0;
};

Panel rule(const std::function<double(double)>& f, double a, double b) {
  Panel p;
  p.value = Rule::integrate(f, a, b, &p.l1);
  return p;
}

// Bisection with error |whole - (left + right)|. Unlike the Kronrod
// heuristic, this difference stays meaningful down to roundoff.
void refine(const std::function<double(double)>& f, double a, double b, const Panel& whole,
            double rel_tol, int depth, QuadratureResult& out, double& l1) {
  const double m = 0.5 * (a + b);
  const Panel left = rule(f, a, m);
  const Panel right = rule(f, m, b);
  const double value = left.value + right.value;
  const double panel_l1 = left.l1 + right.l1;
  const double err = std::abs(value - whole.value);
  const double target = rel_tol * std::max(std::abs(value), 1e-3 * panel_l1) + 64.0 * kEps * panel_l1;
  if (err <= target || depth >= kMaxDepth || !(m > a && m < b)) {
    out.value += value;
    out.error_estimate += err;
    l1 += panel_l1;
    return;
  }
  refine(f, a, m, left, rel_tol, depth + 1, out, l1);
  refine(f, m, b, right, rel_tol, depth + 1, out, l1);
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double rel_tol) {
  if (a == b) return {};
  QuadratureResult out;
  double l1 = 0.0;
  refine(f, a, b, rule(f, a, b), rel_tol, 0, out, l1);
  if (!std::isfinite(out.value)) {
    throw NumericalError("quadrature produced a non-finite value");
  }
  // Integrals that cancel to ~0 are judged against the L1 norm instead.
  const double scale = std::max(std::abs(out.value), l1 * 1e-3);
  const double floor = 64.0 * kEps * l1;
  if (out.error_estimate > rel_tol * scale + floor) {
    std::ostringstream msg;
    msg << "quadrature on [" << a << ", " << b << "] missed tolerance " << rel_tol
        << " (error estimate " << out.error_estimate << ", value " << out.value << ")";
    throw NumericalError(msg.str());
  }
  return out;
}

}  // namespace kmest
