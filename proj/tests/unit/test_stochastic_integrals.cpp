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

#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "kmest/error.hpp"
#include "kmest/rng.hpp"
#include "kmest/stochastic_integrals.hpp"

namespace kmest {
namespace {

constexpr std::size_t kSamples = 1'000'000;

TEST(StepNoise, ZeroNormalsGiveZeroNoise) {
  const StepNoise n = step_noise_from_normals(0.01, 0.0, 0.0);
  EXPECT_EQ(n.dw, 0.0);
  EXPECT_EQ(n.dz, 0.0);
}

TEST(StepNoise, RejectsNonPositiveStep) {
  Rng rng(1);
  EXPECT_THROW(sample_step_noise(0.0, rng), InvalidArgument);
  EXPECT_THROW(sample_step_noise(-0.1, rng), InvalidArgument);
}

TEST(StepNoise, SecondMomentsAtTenMillisecondStep) {
  const double dt = 0.01;
  Rng rng(11);
  double sw = 0.0, sww = 0.0, szz = 0.0, swz = 0.0;
  for (std::size_t i = 0; i < kSamples; ++i) {
    const StepNoise n = sample_step_noise(dt, rng);
    sw += n.dw;
    sww += n.dw * n.dw;
    szz += n.dz * n.dz;
    swz += n.dw * n.dz;
  }
  const double N = static_cast<double>(kSamples);
  EXPECT_NEAR(sw / N, 0.0, 3.0 * std::sqrt(dt / N));
  EXPECT_NEAR(sww / N, dt, 0.01 * dt);
  EXPECT_NEAR(szz / N, dt * dt * dt / 3.0, 0.01 * dt * dt * dt / 3.0);
  EXPECT_NEAR(swz / N, dt * dt / 2.0, 0.05 * dt * dt / 2.0);
}

TEST(MultipleIntegrals, HandExample) {
  const double dt = 0.01;
  const double s = std::sqrt(dt);
  const MultipleIntegrals m = derive_multiple_integrals({s, 0.5 * dt * s}, dt);
  EXPECT_EQ(m.i0, dt);
  EXPECT_EQ(m.i00, 0.5 * dt * dt);
  EXPECT_NEAR(m.i11, 0.0, 1e-18);
  EXPECT_NEAR(m.i01, 0.5 * dt * s, 1e-18);
  EXPECT_NEAR(m.i111, (s * s * s - 3.0 * dt * s) / 6.0, 1e-18);
}

TEST(MultipleIntegrals, IdentitiesHoldBitExactly) {
  for (double dt : {0.005, 0.01, 0.02}) {
    Rng rng(derive_seed(5, 0, static_cast<std::uint64_t>(dt * 1e4)));
    for (std::size_t i = 0; i < kSamples; ++i) {
      const StepNoise n = sample_step_noise(dt, rng);
      const MultipleIntegrals m = derive_multiple_integrals(n, dt);
      const double w = n.dw;
      ASSERT_EQ(m.i11, (w * w - dt) / 2.0);
      ASSERT_EQ(m.i111, (w * w * w - 3.0 * dt * w) / 6.0);
      ASSERT_EQ(m.i01 + m.i10, w * dt);
    }
  }
}

struct MomentCase {
  std::string spec;
  double (*analytic)(double dt);
};

class AnalyticMoments : public ::testing::TestWithParam<MomentCase> {};

TEST_P(AnalyticMoments, WithinThreeStandardErrors) {
  const MomentSpec spec = MomentSpec::parse(GetParam().spec);
  for (double dt : {0.005, 0.01, 0.02}) {
    Rng rng(derive_seed(77, 1, static_cast<std::uint64_t>(dt * 1e4)));
    const MomentEstimate e = estimate_moment(spec, dt, kSamples, rng);
    const double truth = GetParam().analytic(dt);
    EXPECT_EQ(e.samples, kSamples);
    EXPECT_GT(e.standard_error, 0.0);
    EXPECT_LE(std::abs(e.mean - truth), 3.0 * e.standard_error)
        << spec.to_string() << " dt=" << dt << " mean=" << e.mean << " truth=" << truth;
  }
}

INSTANTIATE_TEST_SUITE_P(
    Table, AnalyticMoments,
    ::testing::Values(
        MomentCase{"I1^2", [](double dt) { return dt; }},
        MomentCase{"I11^2", [](double dt) { return dt * dt / 2.0; }},
        MomentCase{"I01^2", [](double dt) { return dt * dt * dt / 3.0; }},
        MomentCase{"I10^2", [](double dt) { return dt * dt * dt / 3.0; }},
        MomentCase{"I1*I10", [](double dt) { return dt * dt / 2.0; }},
        MomentCase{"I1^4", [](double dt) { return 3.0 * dt * dt; }},
        // (W^2 - dt)^4 / 16 with W^2/dt chi-square(1): central fourth moment 60.
        MomentCase{"I11^4", [](double dt) { return 3.75 * std::pow(dt, 4); }},
        MomentCase{"I111^2", [](double dt) { return dt * dt * dt / 6.0; }},
        MomentCase{"I11", [](double) { return 0.0; }},
        MomentCase{"I111", [](double) { return 0.0; }},
        MomentCase{"I1*I11", [](double) { return 0.0; }},
        MomentCase{"I11*I01", [](double) { return 0.0; }},
        MomentCase{"I11*I10", [](double) { return 0.0; }}),
    [](const auto& info) {
      std::string n;
      for (char c : info.param.spec) n += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
      return n;
    });

TEST(MultipleIntegrals, Gaussian4thMomentWithinTwoPercent) {
  Rng rng(3);
  const double dt = 0.01;
  const MomentEstimate e = estimate_moment(MomentSpec::parse("I1^4"), dt, kSamples, rng);
  EXPECT_NEAR(e.mean, 3e-4, 0.02 * 3e-4);
}

// Products with an odd number of Brownian indices have zero mean.
TEST(MultipleIntegrals, OddParityPairsHaveZeroMean) {
  const std::vector<IntegralId> ids{IntegralId::k1, IntegralId::k10, IntegralId::k01,
                                    IntegralId::k11, IntegralId::k111};
  std::vector<MomentSpec> specs;
  for (std::size_t a = 0; a < ids.size(); ++a) {
    for (std::size_t b = a; b < ids.size(); ++b) {
      if ((count_ones(ids[a]) + count_ones(ids[b])) % 2 == 0) continue;
      MomentSpec s;
      if (a == b) {
        s.factors = {{ids[a], 2}};
      } else {
        s.factors = {{ids[a], 1}, {ids[b], 1}};
      }
      specs.push_back(s);
    }
  }
  ASSERT_EQ(specs.size(), 4u);
  Rng rng(19);
  const auto est = estimate_moments(specs, 0.01, kSamples, rng);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    EXPECT_EQ(specs[i].total_ones() % 2, 1);
    EXPECT_LE(std::abs(est[i].mean), 3.0 * est[i].standard_error) << specs[i].to_string();
  }
}

TEST(MomentSpec, ParseAndFormat) {
  const MomentSpec s = MomentSpec::parse("I1^2*I11");
  ASSERT_EQ(s.factors.size(), 2u);
  EXPECT_EQ(s.factors[0].first, IntegralId::k1);
  EXPECT_EQ(s.factors[0].second, 2);
  EXPECT_EQ(s.factors[1].first, IntegralId::k11);
  EXPECT_EQ(s.total_ones(), 4);
  EXPECT_EQ(MomentSpec::parse(s.to_string()).to_string(), s.to_string());
  MultipleIntegrals m;
  m.i1 = 0.5;
  m.i11 = -2.0;
  EXPECT_DOUBLE_EQ(s.evaluate(m), -0.5);
}

TEST(MomentSpec, RejectsMalformed) {
  for (const char* bad : {"", "I2", "I1^", "I1^0", "I1**I11", "X1", "I1^-1"}) {
    EXPECT_THROW(MomentSpec::parse(bad), InvalidArgument) << bad;
  }
}

TEST(MomentEstimate, RejectsSmallSampleAndEmptySpec) {
  Rng rng(1);
  EXPECT_THROW(estimate_moment(MomentSpec::parse("I1"), 0.01, 999, rng), InvalidArgument);
  EXPECT_THROW(estimate_moment(MomentSpec{}, 0.01, 1000, rng), InvalidArgument);
}

TEST(MomentEstimate, DeterministicGivenSeed) {
  Rng a(42), b(42);
  const auto spec = MomentSpec::parse("I11*I01");
  const auto x = estimate_moment(spec, 0.01, 5000, a);
  const auto y = estimate_moment(spec, 0.01, 5000, b);
  EXPECT_EQ(x.mean, y.mean);
  EXPECT_EQ(x.standard_error, y.standard_error);
}

TEST(Rng, DerivedSeedsAreOrderIndependentAndDistinct) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(2, 2, 3));
}

}  // namespace
}  // namespace kmest
