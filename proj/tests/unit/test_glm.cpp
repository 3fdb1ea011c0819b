// Copyright 2026 The sataudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sataudit/errors.hpp"
#include "sataudit/glm.hpp"

namespace sataudit {
namespace {

TEST(Glm, LinksInvertEachOther) {
  for (Family f : {Family::GaussianIdentity, Family::BinomialLogit, Family::PoissonLog}) {
    for (double eta : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
      EXPECT_NEAR(link(f, inverse_link(f, eta)), eta, 1e-12) << to_string(f);
    }
  }
  EXPECT_DOUBLE_EQ(inverse_link(Family::BinomialLogit, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(inverse_link(Family::PoissonLog, 0.0), 1.0);
}

TEST(Glm, InverseLinkRanges) {
  for (double eta : {-700.0, -40.0, 0.0, 40.0, 700.0}) {
    double p = inverse_link(Family::BinomialLogit, eta);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_GE(inverse_link(Family::PoissonLog, eta), 0.0);
  }
}

// y = 1 + 2x + noise; two free parameters, no prior.
GlmProblem line_problem(int n, std::uint64_t seed) {
  GlmProblem p;
  p.family = Family::GaussianIdentity;
  p.n_params = 2;
  p.prior_precision = {0.0, 0.0};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int i = 0; i < n; ++i) {
    double x = static_cast<double>(i) / n;
    DesignRow r;
    r.add(0, 1.0);
    r.add(1, x);
    r.y = 1.0 + 2.0 * x + noise(rng);
    p.rows.push_back(r);
  }
  return p;
}

TEST(Glm, GaussianMatchesLeastSquares) {
  auto p = line_problem(200, 7);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : p.rows) {
    double x = r.vals[1];
    sx += x; sy += r.y; sxx += x * x; sxy += x * r.y;
  }
  const double n = 200.0;
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double intercept = (sy - slope * sx) / n;
  auto sol = fit_penalized_glm(p);
  ASSERT_TRUE(sol.converged);
  EXPECT_NEAR(sol.coef[0], intercept, 1e-9);
  EXPECT_NEAR(sol.coef[1], slope, 1e-9);
}

TEST(Glm, GradientMatchesFiniteDifference) {
  GlmProblem p;
  p.family = Family::PoissonLog;
  p.n_params = 3;
  p.prior_precision = {0.0, 0.5, 2.0};
  for (int i = 0; i < 20; ++i) {
    DesignRow r;
    r.add(0, 1.0);
    r.add(1 + i % 2, 0.1 * i);
    r.y = i % 4;
    p.rows.push_back(r);
  }
  std::vector<double> c = {0.2, -0.3, 0.1};
  auto g = penalized_gradient(p, c);
  for (std::size_t j = 0; j < 3; ++j) {
    auto hi = c, lo = c;
    hi[j] += 1e-6;
    lo[j] -= 1e-6;
    double fd = (penalized_objective(p, hi) - penalized_objective(p, lo)) / 2e-6;
    EXPECT_NEAR(g[j], fd, 1e-4);
  }
}

TEST(Glm, ObjectiveNonIncreasing) {
  GlmProblem p;
  p.family = Family::BinomialLogit;
  p.n_params = 2;
  p.prior_precision = {1.0, 1.0};
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.8);
  for (int i = 0; i < 300; ++i) {
    DesignRow r;
    r.add(0, 1.0);
    r.add(1, i % 3 - 1.0);
    r.y = coin(rng) ? 1.0 : 0.0;
    p.rows.push_back(r);
  }
  // Start far away so several iterations are needed.
  std::vector<double> start = {8.0, -8.0};
  auto sol = fit_penalized_glm(p, {}, start);
  ASSERT_TRUE(sol.converged);
  ASSERT_GE(sol.objective_trace.size(), 3u);
  for (std::size_t i = 1; i < sol.objective_trace.size(); ++i) {
    EXPECT_LE(sol.objective_trace[i], sol.objective_trace[i - 1]);
  }
}

TEST(Glm, PriorKeepsSeparatedLogitFinite) {
  GlmProblem p;
  p.family = Family::BinomialLogit;
  p.n_params = 1;
  p.prior_precision = {1.0};
  for (int i = 0; i < 50; ++i) {
    DesignRow r;
    r.add(0, 1.0);
    r.y = 1.0;
    p.rows.push_back(r);
  }
  auto sol = fit_penalized_glm(p);
  ASSERT_TRUE(sol.converged);
  EXPECT_TRUE(std::isfinite(sol.coef[0]));
  EXPECT_GT(sol.coef[0], 0.0);
}

TEST(Glm, RejectsMalformedProblems) {
  GlmProblem p;
  EXPECT_THROW(fit_penalized_glm(p), UsageError);
  p.n_params = 1;
  p.prior_precision = {1.0, 1.0};
  EXPECT_THROW(fit_penalized_glm(p), UsageError);
  p.prior_precision = {1.0};
  DesignRow r;
  r.add(3, 1.0);
  p.rows.push_back(r);
  EXPECT_THROW(fit_penalized_glm(p), UsageError);
}

}  // namespace
}  // namespace sataudit
