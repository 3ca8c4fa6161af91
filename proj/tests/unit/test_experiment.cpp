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

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "kmest/error.hpp"
#include "kmest/experiment.hpp"

namespace kmest {
namespace {

ExperimentConfig small_cubic() {
  ExperimentConfig c;
  c.model = "cubic";
  c.nb_list = {10, 20};
  c.regime = Regime::kMdtConst;
  c.m_dt = {{50, 0.02}, {100, 0.01}};
  c.mc = 3;
  c.seed = 1234;
  c.dt_int = 1e-3;
  return c;
}

// First M pairs of each bin, scanned by hand.
double naive_drift_term(const TransitionPairSet& pairs, const ExperimentCell& cell, double L,
                        double* diff_term) {
  const double dx = 2.0 * L / static_cast<double>(cell.nb);
  double drift = 0.0, diff = 0.0;
  for (std::size_t k = 0; k < cell.nb; ++k) {
    const double lo = -L + static_cast<double>(k) * dx;
    const double hi = lo + dx;
    const bool last = k + 1 == cell.nb;
    long double s1 = 0.0L, s2 = 0.0L;
    std::size_t n = 0;
    for (const auto& p : pairs.pairs) {
      if (n == cell.m) break;
      const bool in = p.x_start >= lo && (last ? p.x_start <= L : p.x_start < hi);
      if (!in) continue;
      const long double d = static_cast<long double>(p.x_end) - p.x_start;
      s1 += d;
      s2 += d * d;
      ++n;
    }
    EXPECT_EQ(n, cell.m);
    const double a = static_cast<double>(s1 / (n * cell.dt_obs));
    const double d2 = static_cast<double>(s2 / (n * cell.dt_obs));
    const double x = lo + dx / 2.0;
    const double sd = (1.0 + x) / std::sqrt(2.0);
    drift += (a + x * x * x) * (a + x * x * x) * dx;
    diff += (d2 - sd * sd) * (d2 - sd * sd) * dx;
  }
  *diff_term = diff / (2.0 * L);
  return drift / (2.0 * L);
}

TEST(RunMse, MatchesNaiveReference) {
  const ExperimentConfig c = small_cubic();
  const MSEReport rep = run_mse(c);
  ASSERT_EQ(rep.cells.size(), 4u);
  for (const CellReport& cr : rep.cells) {
    double sum_a = 0.0, sum_d = 0.0;
    for (std::size_t r = 0; r < c.mc; ++r) {
      const TransitionPairSet pairs = realization_pairs(c, cr.cell, r);
      double d = 0.0;
      const double a = naive_drift_term(pairs, cr.cell, c.half_width, &d);
      EXPECT_NEAR(cr.drift_terms[r], a, 1e-12 * a);
      EXPECT_NEAR(cr.diff_terms[r], d, 1e-12 * d);
      sum_a += a;
      sum_d += d;
    }
    EXPECT_NEAR(cr.mse_drift, sum_a / 3.0, 1e-12 * cr.mse_drift);
    EXPECT_NEAR(cr.mse_diff, sum_d / 3.0, 1e-12 * cr.mse_diff);
    EXPECT_EQ(cr.realizations, 3u);
    EXPECT_EQ(cr.excluded, 0u);
    EXPECT_GE(cr.se_drift, 0.0);
    EXPECT_GE(cr.se_diff, 0.0);
    EXPECT_GT(cr.gen_seconds, 0.0);
    EXPECT_GT(cr.steps, 0u);
  }
}

TEST(RunMse, IndependentOfWorkerCount) {
  ExperimentConfig c = small_cubic();
  c.mc = 6;
  const MSEReport serial = run_mse(c);
  c.workers = 4;
  const MSEReport parallel = run_mse(c);
  ASSERT_EQ(serial.cells.size(), parallel.cells.size());
  for (std::size_t i = 0; i < serial.cells.size(); ++i) {
    EXPECT_EQ(serial.cells[i].mse_drift, parallel.cells[i].mse_drift);
    EXPECT_EQ(serial.cells[i].mse_diff, parallel.cells[i].mse_diff);
    EXPECT_EQ(serial.cells[i].drift_terms, parallel.cells[i].drift_terms);
    EXPECT_EQ(serial.cells[i].steps, parallel.cells[i].steps);
  }
}

TEST(RunMse, SharedTrajectoriesMatchSeparateOnesInDistributionOnly) {
  ExperimentConfig c = small_cubic();
  const MSEReport shared = run_mse(c);
  c.share_trajectories = false;
  const MSEReport separate = run_mse(c);
  // The finest grid owns the shared trajectory, so its terms are identical.
  EXPECT_EQ(shared.cells[1].drift_terms, separate.cells[1].drift_terms);
  EXPECT_NE(shared.cells[0].drift_terms, separate.cells[0].drift_terms);
}

TEST(RunMse, StarvationNamesTheCell) {
  ExperimentConfig c = small_cubic();
  c.max_steps = 1000;
  try {
    run_mse(c);
    FAIL();
  } catch (const StarvationError& e) {
    EXPECT_NE(std::string(e.what()).find("M=50"), std::string::npos) << e.what();
    EXPECT_FALSE(e.starving_bins().empty());
  }
}

TEST(ExpandCells, RegimesAndValidation) {
  ExperimentConfig c;
  c.regime = Regime::kMdtInf;
  c.m_list = {50, 100};
  c.nb_list = {10, 20, 40};
  const auto cells = expand_cells(c);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].m, 50u);
  EXPECT_EQ(cells[2].nb, 40u);
  EXPECT_DOUBLE_EQ(cells[2].dx, 0.025);
  EXPECT_EQ(cells[3].dt_obs, 0.01);

  c.regime = Regime::kDxDtSweep;
  c.dt_list = {0.005, 0.01};
  c.m = 500;
  EXPECT_EQ(expand_cells(c).size(), 6u);

  c.mc = 0;
  EXPECT_THROW(expand_cells(c), InvalidArgument);
  c.mc = 1;
  c.dt_list = {-0.01};
  EXPECT_THROW(expand_cells(c), InvalidArgument);
  c.regime = Regime::kMdtConst;
  EXPECT_THROW(expand_cells(c), InvalidArgument);
  c.m_dt = {{0, 0.01}};
  EXPECT_THROW(expand_cells(c), InvalidArgument);
}

TEST(Regime, ParseRoundTrip) {
  for (Regime r : {Regime::kMdtConst, Regime::kMdtInf, Regime::kDxDtSweep}) {
    EXPECT_EQ(parse_regime(to_string(r)), r);
  }
  EXPECT_THROW(parse_regime("mdt"), InvalidArgument);
}

TEST(MseTerms, BinAveragedSquaredError) {
  const SdeModel ou = builtin_model("ou", default_params("ou"));
  BinnedEstimate e(make_grid(1.0, 2), 0.01);
  e.counts = {5, 5};
  e.drift_hat = {0.5 + 0.1, -0.5 - 0.2};  // truth +0.5 and -0.5
  e.diff2_hat = {1.0, 1.3};
  const auto [a, d] = mse_terms(e, ou);
  EXPECT_NEAR(a, (0.01 + 0.04) / 2.0, 1e-15);
  EXPECT_NEAR(d, 0.09 / 2.0, 1e-15);
  e.counts[1] = 0;
  EXPECT_THROW(mse_terms(e, ou), InvalidArgument);
}

TEST(MDoubling, DeterministicModelIsDegenerate) {
  ExperimentConfig c;
  c.custom_model = std::make_shared<SdeModel>(
      "still", [](double) { return CoefficientJet{}; });
  c.regime = Regime::kDxDtSweep;
  c.dt_list = {0.01};
  c.nb_list = {1};
  c.mc = 2;
  c.seed = 3;
  c.dt_int = 0.01;
  c.burn_in = 0.0;
  const DoublingReport r = run_m_doubling(c, 20, 40);
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_EQ(r.at_m1.cells[0].mse_drift, 0.0);
  EXPECT_TRUE(r.cells[0].drift_degenerate);
  EXPECT_TRUE(r.cells[0].diff_degenerate);
  EXPECT_TRUE(std::isnan(r.cells[0].drift_ratio));
}

// Variance of an M-sample mean halves when M doubles.
TEST(MDoubling, OuSingleBinRatioNearTwo) {
  ExperimentConfig c;
  c.model = "ou";
  c.regime = Regime::kDxDtSweep;
  c.dt_list = {0.01};
  c.nb_list = {1};
  c.mc = 400;
  c.seed = 99;
  c.dt_int = 1e-3;
  c.burn_in = 2.0;
  c.workers = 4;
  const DoublingReport r = run_m_doubling(c, 200, 400);
  EXPECT_NEAR(r.cells[0].drift_ratio, 2.0, 0.45);
  EXPECT_FALSE(r.cells[0].drift_degenerate);
}

TEST(MDoubling, Preconditions) {
  ExperimentConfig c = small_cubic();
  EXPECT_THROW(run_m_doubling(c, 50, 100), InvalidArgument);
  c.regime = Regime::kDxDtSweep;
  c.dt_list = {0.01};
  EXPECT_THROW(run_m_doubling(c, 50, 120), InvalidArgument);
}

TEST(TimingReport, FinerBinsTakeLonger) {
  ExperimentConfig c;
  c.model = "cubic";
  c.regime = Regime::kDxDtSweep;
  c.dt_list = {0.01};
  c.m = 500;
  c.nb_list = {4, 40};
  c.mc = 2;
  c.seed = 17;
  const auto t = timing_report(c);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_LT(t[0].steps, t[1].steps);
  EXPECT_LT(t[0].gen_seconds, t[1].gen_seconds);
}

}  // namespace
}  // namespace kmest
