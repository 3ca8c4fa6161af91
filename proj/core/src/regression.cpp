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

#include "kmest/regression.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "kmest/error.hpp"

namespace kmest {

std::string_view to_string(FitKind kind) noexcept {
  switch (kind) {
    case FitKind::kOls: return "ols";
    case FitKind::kRidge: return "ridge";
    case FitKind::kLasso: return "lasso";
  }
  return "?";
}

FitKind parse_fit_kind(std::string_view name) {
  if (name == "ols") return FitKind::kOls;
  if (name == "ridge") return FitKind::kRidge;
  if (name == "lasso") return FitKind::kLasso;
  throw InvalidArgument("unknown fit method '" + std::string(name) +
                        "' (expected ols, ridge or lasso)");
}

double PolynomialFit::operator()(double x) const noexcept {
  double v = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) v = v * x + *it;
  return v;
}

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Standardized weighted least-squares problem for one point set.
struct Problem {
  StandardizedDesign design;
  Matrix z;         // n x p standardized powers
  Vector w;         // normalized weights
  Vector y_center;  // y - weighted mean
  Matrix gram;
  Vector moment;
};

std::vector<FitPoint> prepare(std::span<const FitPoint> points, int degree) {
  if (degree < 1) throw InvalidArgument("polynomial degree must be >= 1");
  std::vector<FitPoint> kept;
  for (const FitPoint& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.weight)) {
      throw InvalidArgument("fit points must be finite");
    }
    if (p.weight > 0.0) kept.push_back(p);
  }
  if (kept.size() < static_cast<std::size_t>(degree) + 1) {
    std::ostringstream msg;
    msg << "degree-" << degree << " fit needs at least " << degree + 1
        << " points with positive weight (got " << kept.size() << ")";
    throw InvalidArgument(msg.str());
  }
  std::sort(kept.begin(), kept.end(),
            [](const FitPoint& a, const FitPoint& b) { return a.x < b.x; });
  for (std::size_t i = 1; i < kept.size(); ++i) {
    if (kept[i].x == kept[i - 1].x) {
      throw InvalidArgument("fit points must have distinct x values");
    }
  }
  return kept;
}

Problem build(const std::vector<FitPoint>& pts, int degree) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  const auto p = static_cast<Eigen::Index>(degree);
  Problem prob;
  double total = 0.0;
  for (const auto& pt : pts) total += pt.weight;
  prob.w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) prob.w[i] = pts[static_cast<std::size_t>(i)].weight / total;

  Matrix raw(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    double xp = 1.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      xp *= pts[static_cast<std::size_t>(i)].x;
      raw(i, j) = xp;
    }
  }
  auto& d = prob.design;
  d.column_mean.resize(static_cast<std::size_t>(p));
  d.column_scale.resize(static_cast<std::size_t>(p));
  prob.z.resize(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = prob.w.dot(raw.col(j));
    const double var = prob.w.dot((raw.col(j).array() - mean).square().matrix());
    const double scale = std::sqrt(var);
    if (!(scale > 0.0)) throw InvalidArgument("constant power column in fit design");
    d.column_mean[static_cast<std::size_t>(j)] = mean;
    d.column_scale[static_cast<std::size_t>(j)] = scale;
    prob.z.col(j) = (raw.col(j).array() - mean) / scale;
  }
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = pts[static_cast<std::size_t>(i)].y;
  d.y_mean = prob.w.dot(y);
  prob.y_center = y.array() - d.y_mean;
  const Matrix wz = prob.w.asDiagonal() * prob.z;
  prob.gram = prob.z.transpose() * wz;
  prob.moment = wz.transpose() * prob.y_center;
  d.gram.assign(prob.gram.data(), prob.gram.data() + p * p);
  d.moment.assign(prob.moment.data(), prob.moment.data() + p);
  return prob;
}

std::vector<double> destandardize(const Vector& beta, const StandardizedDesign& d) {
  std::vector<double> c(static_cast<std::size_t>(beta.size()) + 1, 0.0);
  double intercept = d.y_mean;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const auto u = static_cast<std::size_t>(j);
    c[u + 1] = beta[j] / d.column_scale[u];
    intercept -= c[u + 1] * d.column_mean[u];
  }
  c[0] = intercept;
  return c;
}

Vector solve_ols(const Problem& prob) {
  const Vector sw = prob.w.array().sqrt();
  const Matrix a = sw.asDiagonal() * prob.z;
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() < a.cols()) {
    throw NumericalError("OLS design is rank deficient");
  }
  return qr.solve(Vector(sw.cwiseProduct(prob.y_center)));
}

Vector solve_ridge(const Problem& prob, double lambda) {
  const auto n = prob.z.rows();
  const auto p = prob.z.cols();
  Matrix a(n + p, p);
  const Vector sw = prob.w.array().sqrt();
  a.topRows(n) = sw.asDiagonal() * prob.z;
  a.bottomRows(p) = std::sqrt(lambda) * Matrix::Identity(p, p);
  Vector b = Vector::Zero(n + p);
  b.head(n) = sw.cwiseProduct(prob.y_center);
  return Eigen::ColPivHouseholderQR<Matrix>(a).solve(b);
}

double soft_threshold(double v, double lambda) {
  if (v > lambda) return v - lambda;
  if (v < -lambda) return v + lambda;
  return 0.0;
}

double kkt_violation(const Problem& prob, const Vector& beta, double lambda) {
  const Vector grad = prob.moment - prob.gram * beta;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) {
      const double s = beta[j] > 0.0 ? 1.0 : -1.0;
      worst = std::max(worst, std::abs(grad[j] - lambda * s));
    } else {
      worst = std::max(worst, std::abs(grad[j]) - lambda);
    }
  }
  return std::max(worst, 0.0);
}

struct LassoOutcome {
  Vector beta;
  std::size_t sweeps = 0;
  bool converged = false;
};

// One cyclic coordinate-descent sweep; returns the largest coefficient change.
double sweep(const Problem& prob, Vector& beta, double lambda) {
  double largest = 0.0;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double g = prob.moment[j] - prob.gram.row(j).dot(beta) + prob.gram(j, j) * beta[j];
    const double next = soft_threshold(g, lambda) / prob.gram(j, j);
    largest = std::max(largest, std::abs(next - beta[j]));
    beta[j] = next;
  }
  return largest;
}

// Solves the KKT system on the current support and sign pattern. Returns
// true (and overwrites beta) only if the result is a valid lasso solution.
bool polish(const Problem& prob, Vector& beta, double lambda) {
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) active.push_back(j);
  }
  Vector candidate = Vector::Zero(beta.size());
  if (!active.empty()) {
    const auto m = static_cast<Eigen::Index>(active.size());
    Matrix g(m, m);
    Vector rhs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const double s = beta[active[static_cast<std::size_t>(a)]] > 0.0 ? 1.0 : -1.0;
      rhs[a] = prob.moment[active[static_cast<std::size_t>(a)]] - lambda * s;
      for (Eigen::Index b = 0; b < m; ++b) {
        g(a, b) = prob.gram(active[static_cast<std::size_t>(a)], active[static_cast<std::size_t>(b)]);
      }
    }
    const Vector sol = g.colPivHouseholderQr().solve(rhs);
    for (Eigen::Index a = 0; a < m; ++a) {
      const Eigen::Index j = active[static_cast<std::size_t>(a)];
      if ((sol[a] > 0.0) != (beta[j] > 0.0) || sol[a] == 0.0) return false;
      candidate[j] = sol[a];
    }
  }
  const Vector grad = prob.moment - prob.gram * candidate;
  const double slack = 1e-12 * std::max(1.0, lambda);
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (candidate[j] == 0.0 && std::abs(grad[j]) > lambda + slack) return false;
  }
  beta = candidate;
  return true;
}

LassoOutcome solve_lasso(const Problem& prob, double lambda, Vector beta,
                         const FitOptions& options) {
  LassoOutcome out;
  constexpr std::size_t kPolishEvery = 25;
  for (std::size_t s = 1; s <= options.max_sweeps; ++s) {
    const double change = sweep(prob, beta, lambda);
    out.sweeps = s;
    if (change <= options.tolerance) {
      out.converged = true;
      break;
    }
    if (s % kPolishEvery == 0) {
      Vector trial = beta;
      if (polish(prob, trial, lambda)) {
        Vector confirm = trial;
        if (sweep(prob, confirm, lambda) <= options.tolerance) {
          beta = trial;
          out.converged = true;
          break;
        }
      }
    }
  }
  out.beta = std::move(beta);
  return out;
}

std::vector<double> lambda_grid(double lambda_max, std::size_t size) {
  // Descending so each solve warm-starts from a sparser neighbour.
  std::vector<double> grid(size);
  const double lo = std::log(1e-5 * lambda_max);
  const double hi = std::log(1e-1 * lambda_max);
  for (std::size_t i = 0; i < size; ++i) {
    const double t = size == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(size - 1);
    grid[i] = std::exp(hi + t * (lo - hi));
  }
  return grid;
}

double predict(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

struct CvResult {
  double lambda = 0.0;
  std::vector<double> lambdas;
  std::vector<double> errors;
};

CvResult cross_validate(const std::vector<FitPoint>& pts, const Problem& full,
                        const FitOptions& options) {
  CvResult cv;
  const double lambda_max = full.moment.cwiseAbs().maxCoeff();
  if (!(lambda_max > 0.0)) return cv;
  cv.lambdas = lambda_grid(lambda_max, std::max<std::size_t>(options.cv_grid_size, 1));
  cv.errors.assign(cv.lambdas.size(), 0.0);
  const std::size_t folds = std::clamp<std::size_t>(options.cv_folds, 2, pts.size());
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<FitPoint> train;
    std::vector<FitPoint> held;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      (i % folds == f ? held : train).push_back(pts[i]);
    }
    if (train.size() < static_cast<std::size_t>(options.degree) + 1) {
      throw InvalidArgument("too few points for lasso cross-validation");
    }
    const Problem prob = build(train, options.degree);
    Vector beta = Vector::Zero(options.degree);
    for (std::size_t l = 0; l < cv.lambdas.size(); ++l) {
      const LassoOutcome r = solve_lasso(prob, cv.lambdas[l], beta, options);
      if (!r.converged) {
        cv.errors[l] = std::numeric_limits<double>::infinity();
        continue;
      }
      beta = r.beta;
      const std::vector<double> c = destandardize(beta, prob.design);
      for (const FitPoint& p : held) {
        const double e = p.y - predict(c, p.x);
        cv.errors[l] += p.weight * e * e;
      }
    }
  }
  // Largest lambda among ties.
  std::size_t best = 0;
  for (std::size_t l = 1; l < cv.errors.size(); ++l) {
    if (cv.errors[l] < cv.errors[best]) best = l;
  }
  if (!std::isfinite(cv.errors[best])) {
    throw ConvergenceError("lasso did not converge for any cross-validation lambda");
  }
  cv.lambda = cv.lambdas[best];
  return cv;
}

}  // namespace

StandardizedDesign standardize(std::span<const FitPoint> points, int degree) {
  return build(prepare(points, degree), degree).design;
}

std::vector<double> to_standardized(const PolynomialFit& fit,
                                    const StandardizedDesign& design) {
  std::vector<double> beta(design.column_scale.size());
  for (std::size_t j = 0; j < beta.size(); ++j) {
    beta[j] = fit.coefficients[j + 1] * design.column_scale[j];
  }
  return beta;
}

PolynomialFit fit(std::span<const FitPoint> points, const FitOptions& options) {
  const std::vector<FitPoint> pts = prepare(points, options.degree);
  const Problem prob = build(pts, options.degree);

  PolynomialFit out;
  out.degree = options.degree;
  out.method = options.method;
  out.diagnostics.points_used = pts.size();

  Vector beta;
  switch (options.method.kind) {
    case FitKind::kOls:
      out.method.lambda.reset();
      beta = solve_ols(prob);
      break;
    case FitKind::kRidge: {
      if (!options.method.lambda || !(*options.method.lambda >= 0.0)) {
        throw InvalidArgument("ridge needs a penalty lambda >= 0");
      }
      beta = solve_ridge(prob, *options.method.lambda);
      break;
    }
    case FitKind::kLasso: {
      double lambda = 0.0;
      if (options.method.lambda) {
        lambda = *options.method.lambda;
        if (!(lambda >= 0.0)) throw InvalidArgument("lasso lambda must be >= 0");
      } else {
        CvResult cv = cross_validate(pts, prob, options);
        lambda = cv.lambda;
        out.diagnostics.lambda_from_cv = true;
        out.diagnostics.cv_lambdas = std::move(cv.lambdas);
        out.diagnostics.cv_errors = std::move(cv.errors);
      }
      LassoOutcome r = solve_lasso(prob, lambda, Vector::Zero(options.degree), options);
      if (!r.converged) {
        std::ostringstream msg;
        msg << "lasso did not converge within " << options.max_sweeps
            << " sweeps (lambda = " << lambda << ")";
        throw ConvergenceError(msg.str());
      }
      beta = std::move(r.beta);
      out.method.lambda = lambda;
      out.diagnostics.iterations = r.sweeps;
      out.diagnostics.kkt_violation = kkt_violation(prob, beta, lambda);
      break;
    }
  }

  out.coefficients = destandardize(beta, prob.design);
  // Zero standardized slopes stay exactly zero in the raw basis.
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta[j] == 0.0) out.coefficients[static_cast<std::size_t>(j) + 1] = 0.0;
  }
  for (const FitPoint& p : pts) {
    const double e = p.y - out(p.x);
    out.diagnostics.rss += p.weight * e * e;
  }
  return out;
}

std::optional<PolynomialTruth> polynomial_truth(std::string_view model,
                                                const ParamMap& p) {
  auto get = [&](std::string_view key) {
    const auto it = p.find(key);
    if (it == p.end()) throw InvalidArgument("missing parameter '" + std::string(key) + "'");
    return it->second;
  };
  if (model == "cubic") {
    const double s1 = get("sigma1");
    const double s2 = get("sigma2");
    return PolynomialTruth{{0.0, 0.0, 0.0, -get("gamma")},
                           {s1 * s1, 2.0 * s1 * s2, s2 * s2}};
  }
  if (model == "dw_additive" || model == "dw_multiplicative") {
    const double g = get("gamma");
    const double b0 = get("b0");
    std::vector<double> drift{0.0, g * b0, 0.0, -g};
    if (model == "dw_additive") {
      const double s = get("sigma");
      return PolynomialTruth{drift, {s * s}};
    }
    const double s1 = get("sigma1");
    const double s2 = get("sigma2");
    return PolynomialTruth{drift, {s1 * s1, 0.0, 2.0 * s1 * s2, 0.0, s2 * s2}};
  }
  if (model == "ou") {
    const double s = get("sigma");
    return PolynomialTruth{{0.0, -get("theta")}, {s * s}};
  }
  return std::nullopt;
}

namespace {

std::vector<double> abs_error(const std::vector<double>& fitted,
                              const std::vector<double>& truth) {
  std::vector<double> err(std::max(fitted.size(), truth.size()), 0.0);
  for (std::size_t i = 0; i < err.size(); ++i) {
    const double f = i < fitted.size() ? fitted[i] : 0.0;
    const double t = i < truth.size() ? truth[i] : 0.0;
    err[i] = std::abs(f - t);
  }
  return err;
}

}  // namespace

PipelineResult fit_pipeline(const BinnedEstimate& estimate,
                            const std::optional<PolynomialTruth>& truth,
                            const PipelineOptions& options) {
  const std::size_t min_bins =
      options.min_bins.value_or(static_cast<std::size_t>(options.fit.degree) + 1);
  std::vector<FitPoint> drift_pts;
  std::vector<FitPoint> diff_pts;
  for (std::size_t k = 0; k < estimate.grid.size(); ++k) {
    if (estimate.counts[k] == 0 || estimate.counts[k] < options.min_count) continue;
    const double x = estimate.grid.center(k);
    const auto w = static_cast<double>(estimate.counts[k]);
    drift_pts.push_back({x, estimate.drift_hat[k], w});
    if (estimate.has_diffusion) diff_pts.push_back({x, estimate.diff2_hat[k], w});
  }
  if (drift_pts.size() < min_bins || !estimate.has_diffusion) {
    std::ostringstream msg;
    msg << "too few usable bins: " << drift_pts.size() << " bins with >= "
        << options.min_count << " pairs, need " << min_bins;
    if (!estimate.has_diffusion) msg << " (estimate carries no diffusion field)";
    throw InvalidArgument(msg.str());
  }
  PipelineResult out{fit(drift_pts, options.fit), fit(diff_pts, options.fit), {}, {}};
  if (truth) {
    out.drift_abs_error = abs_error(out.drift.coefficients, truth->drift);
    out.diff2_abs_error = abs_error(out.diff2.coefficients, truth->diff2);
  }
  return out;
}

}  // namespace kmest
