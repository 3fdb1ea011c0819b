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

#include "helpers.hpp"
#include "sataudit/errors.hpp"
#include "sataudit/pairwise.hpp"

namespace sataudit {
namespace {

using testing::click;
using testing::make_impression;

MetricVector mv(double gu, int reform, int scc, int pcc = 0) {
  MetricVector v;
  v.graded_utility = gu;
  v.reformulation = reform;
  v.successful_click_count = scc;
  v.page_click_count = pcc;
  return v;
}

TEST(PairLabel, InternalExamples) {
  EXPECT_EQ(label_pair_internal(mv(0, 0, 0), mv(0, 1, 0)), +1);
  EXPECT_EQ(label_pair_internal(mv(1.0, 0, 0), mv(1.0 / 3, 0, 0)), +1);
  EXPECT_EQ(label_pair_internal(mv(0.3, 0, 3), mv(0.0, 0, 1)), +1);  // combined rule
  EXPECT_EQ(label_pair_internal(mv(0.3, 0, 2), mv(0.0, 0, 2)), 0);
  EXPECT_EQ(label_pair_internal(mv(0.5, 1, 2), mv(0.5, 1, 2)), 0);
}

TEST(PairLabel, RuleOrder) {
  // Reformulation wins over a large GU advantage for the other side.
  EXPECT_EQ(label_pair_internal(mv(-1, 0, 0), mv(1, 1, 5)), +1);
  // GU beats SCC.
  EXPECT_EQ(label_pair_internal(mv(1, 0, 0), mv(-1, 0, 5)), +1);
}

TEST(PairLabel, StrictBoundaries) {
  EXPECT_EQ(label_pair_internal(mv(0.4, 0, 0), mv(0.0, 0, 0)), 0);
  EXPECT_EQ(label_pair_internal(mv(0.0, 0, 3), mv(0.0, 0, 1)), 0);
  EXPECT_EQ(label_pair_internal(mv(0.2, 0, 3), mv(0.0, 0, 1)), 0);
  EXPECT_EQ(label_pair_external(mv(0, 0, 0, 3), mv(0, 0, 0, 1)), 0);
}

TEST(PairLabel, ExternalExamples) {
  EXPECT_EQ(label_pair_external(mv(0, 0, 0, 5), mv(0, 0, 0, 1)), +1);
  EXPECT_EQ(label_pair_external(mv(0, 0, 0, 1), mv(0, 0, 0, 5)), -1);
  PairThresholds th;
  th.pcc_external = 4;
  EXPECT_EQ(label_pair_external(mv(0, 0, 0, 5), mv(0, 0, 0, 1), th), 0);
}

TEST(PairLabel, Antisymmetry) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> level(0, 3), bit(0, 1), count(0, 6);
  const double gu[4] = {kGuNoClick, kGuUnsuccessful, kGuHighEffort, kGuLowEffort};
  for (int i = 0; i < 20000; ++i) {
    auto a = mv(gu[level(rng)], bit(rng), count(rng), count(rng));
    auto b = mv(gu[level(rng)], bit(rng), count(rng), count(rng));
    ASSERT_EQ(label_pair_internal(a, b), -label_pair_internal(b, a));
    ASSERT_EQ(label_pair_external(a, b), -label_pair_external(b, a));
    ASSERT_EQ(label_pair_internal(a, a), 0);
  }
}

TEST(PairLabel, ThresholdValidation) {
  PairThresholds th;
  EXPECT_NO_THROW(th.validate());
  th.k = 1.0;
  EXPECT_THROW(th.validate(), UsageError);
  th = {};
  th.gu_weak = 0.5;
  EXPECT_THROW(th.validate(), UsageError);
  th = {};
  th.scc_weak = 0;
  EXPECT_THROW(th.validate(), UsageError);
}

std::vector<Impression> query_impressions(const std::string& q,
                                          std::vector<AgeGroup> ages,
                                          std::string prefix) {
  std::vector<Impression> out;
  int n = 0;
  for (auto a : ages) {
    out.push_back(make_impression(prefix + std::to_string(n++), q, {a, Gender::Male}));
  }
  return out;
}

TEST(Eligibility, Examples) {
  using A = AgeGroup;
  std::vector<Impression> all;
  auto add = [&](std::vector<Impression> v) { all.insert(all.end(), v.begin(), v.end()); };
  add(query_impressions("two", std::vector<A>(12, A::G1), "a"));
  all.back().demographics.age = A::G2;
  add(query_impressions("nine", {A::G1, A::G1, A::G1, A::G2, A::G2, A::G2, A::G3, A::G3, A::G3}, "b"));
  add(query_impressions("ten", {A::G1, A::G1, A::G1, A::G3, A::G3, A::G3, A::G4, A::G4, A::G4, A::G4}, "c"));
  auto corpus = make_corpus(all);
  EXPECT_EQ(eligible_queries(corpus), std::vector<std::string>{"ten"});
  QueryEligibility loose{Factor::Age, 2, 9};
  EXPECT_EQ(eligible_queries(corpus, loose), (std::vector<std::string>{"nine", "ten", "two"}));
}

TEST(Sampling, ReplacementWhenScarce) {
  auto corpus = make_corpus(query_impressions("q", {AgeGroup::G1, AgeGroup::G4}, "x"));
  std::vector<std::string> eligible = {"q"};
  PairSampling cfg;
  cfg.query_fraction = 1.0;
  cfg.pairs_per_query = 5;
  auto pairs = sample_pairs(corpus, eligible, cfg);
  ASSERT_EQ(pairs.size(), 5u);
  for (const auto& p : pairs) EXPECT_EQ(p, (ImpressionPair{0, 1}));
}

TEST(Sampling, CrossGroupOnlyAndDeterministic) {
  using A = AgeGroup;
  std::vector<Impression> all;
  for (int q = 0; q < 20; ++q) {
    auto v = query_impressions("q" + std::to_string(q),
                               {A::G1, A::G1, A::G2, A::G3, A::G4, A::G4}, "i" + std::to_string(q) + "-");
    all.insert(all.end(), v.begin(), v.end());
  }
  auto corpus = make_corpus(all);
  auto eligible = eligible_queries(corpus, {Factor::Age, 3, 6});
  ASSERT_EQ(eligible.size(), 20u);
  PairSampling cfg;
  cfg.pairs_per_query = 8;
  cfg.seed = 99;
  auto a = sample_pairs(corpus, eligible, cfg);
  auto b = sample_pairs(corpus, eligible, cfg);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.size(), 2u * 8u);  // ceil(0.1 * 20) queries
  for (const auto& p : a) {
    EXPECT_LT(p.i, p.j);
    EXPECT_NE(corpus.impressions[p.i].demographics.age, corpus.impressions[p.j].demographics.age);
    EXPECT_EQ(corpus.impressions[p.i].query_text, corpus.impressions[p.j].query_text);
  }
  cfg.query_fraction = 1.0;
  EXPECT_EQ(sample_pairs(corpus, eligible, cfg).size(), 20u * 8u);
  cfg.seed = 100;
  cfg.query_fraction = 0.1;
  EXPECT_NE(sample_pairs(corpus, eligible, cfg), a);
  cfg.query_fraction = 0.0;
  EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(PairModel, PredictArithmetic) {
  PairModel m;
  DemographicProfile g4m{AgeGroup::G4, Gender::Male};
  DemographicProfile g1f{AgeGroup::G1, Gender::Female};
  EXPECT_DOUBLE_EQ(predict_pair_prob(m, g4m, g1f), 0.5);
  m.age_i[3] = 0.2;
  EXPECT_NEAR(predict_pair_prob(m, g4m, g1f), 0.5498, 1e-4);
}

TEST(PairModel, AllZeroLabelsIsAnError) {
  PairLabelCounts counts;
  counts.add({{}, {AgeGroup::G2, Gender::Male}, 0});
  EXPECT_THROW(fit_pair_model(counts), DataError);
}

std::vector<LabeledPair> biased_pairs(double g4_rate, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> prof(0, kNumProfiles - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<LabeledPair> out;
  while (static_cast<int>(out.size()) < n) {
    auto pi = DemographicProfile::from_index(prof(rng));
    auto pj = DemographicProfile::from_index(prof(rng));
    if (pi.age == pj.age) continue;
    double rate = 0.5;
    if (pi.age == AgeGroup::G4) rate = g4_rate;
    if (pj.age == AgeGroup::G4) rate = 1.0 - g4_rate;
    out.push_back({pi, pj, u(rng) < rate ? +1 : -1});
  }
  return out;
}

TEST(PairModel, RecoversSlotAdvantage) {
  auto pairs = biased_pairs(0.7, 20000, 5);
  auto model = fit_pair_model(pairs);
  EXPECT_TRUE(model.symmetrized);
  auto grid = age_pairing_grid(model);
  for (int b = 0; b < 3; ++b) {
    EXPECT_GT(grid[3][static_cast<std::size_t>(b)], 0.6);
  }
}

TEST(PairModel, SymmetrizedGridIsExactlyComplementary) {
  auto pairs = biased_pairs(0.65, 5000, 6);
  auto model = fit_pair_model(pairs);
  for (int p = 0; p < kNumProfiles; ++p) {
    for (int q = 0; q < kNumProfiles; ++q) {
      auto a = DemographicProfile::from_index(p);
      auto b = DemographicProfile::from_index(q);
      double s = predict_pair_prob(model, a, b) + predict_pair_prob(model, b, a);
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(PairModel, NullDataNearHalf) {
  auto pairs = biased_pairs(0.5, 200000, 7);
  auto grid = age_pairing_grid(fit_pair_model(pairs));
  for (const auto& row : grid) {
    for (double p : row) EXPECT_NEAR(p, 0.5, 0.02);
  }
}

TEST(PairModel, CountsAndPairsAgree) {
  auto pairs = biased_pairs(0.6, 3000, 8);
  PairLabelCounts counts;
  for (const auto& p : pairs) counts.add(p);
  EXPECT_EQ(counts.total(), 3000u);
  auto a = fit_pair_model(pairs);
  auto b = fit_pair_model(counts);
  EXPECT_NEAR(a.mu0, b.mu0, 1e-9);
  EXPECT_NEAR(a.age_i[3], b.age_i[3], 1e-9);
}

TEST(Thresholds, BackSolvePublishedConstant) {
  MetricGaps gaps;
  gaps.gu = 0.16;
  auto d = derive_thresholds(gaps, 2.5);
  EXPECT_DOUBLE_EQ(d.thresholds.gu_strong, 0.4);
  EXPECT_DOUBLE_EQ(d.thresholds.gu_weak, 0.2);
}

TEST(Thresholds, ZeroGapKeepsDefaults) {
  MetricGaps gaps{0.0, 0.0, 0.0};
  auto d = derive_thresholds(gaps, 2.5);
  PairThresholds defaults;
  EXPECT_EQ(d.thresholds.gu_strong, defaults.gu_strong);
  EXPECT_EQ(d.thresholds.scc_strong, defaults.scc_strong);
  EXPECT_EQ(d.thresholds.pcc_external, defaults.pcc_external);
  EXPECT_EQ(d.warnings.size(), 3u);
  EXPECT_FALSE(d.scc_strong_raw);
}

TEST(Thresholds, LinearInK) {
  MetricGaps gaps{0.1, 0.7, 0.9};
  auto a = derive_thresholds(gaps, 2.0);
  auto b = derive_thresholds(gaps, 4.0);
  EXPECT_DOUBLE_EQ(b.thresholds.gu_strong, 2.0 * a.thresholds.gu_strong);
  EXPECT_DOUBLE_EQ(*b.scc_strong_raw, 2.0 * *a.scc_strong_raw);
  EXPECT_DOUBLE_EQ(*b.pcc_external_raw, 2.0 * *a.pcc_external_raw);
  EXPECT_NO_THROW(b.thresholds.validate());
  EXPECT_THROW(derive_thresholds(gaps, 1.0), UsageError);
}

TEST(Thresholds, FromFits) {
  auto fit = MultilevelFit::zero(family_for(MetricKind::GU), {"news"});
  fit.effects.alpha_age[3] = 0.16;
  auto grid = difficulty_grid();
  auto d = derive_thresholds(&fit, nullptr, nullptr, 2.5, grid);
  EXPECT_NEAR(d.thresholds.gu_strong, 0.4, 1e-12);
  EXPECT_EQ(d.thresholds.scc_strong, 2);
  EXPECT_EQ(d.warnings.size(), 2u);
}

TEST(PairAudit, RefusesClicksOnlyForInternal) {
  std::vector<Impression> imps;
  auto c = click("r1", 40);
  c.dwell_seconds.reset();
  imps.push_back(make_impression("a", "q", {}, {c}));
  imps.back().reformulated.reset();
  auto corpus = make_corpus(imps);
  std::vector<MetricVector> vecs(1);
  EXPECT_THROW(run_pair_audit(corpus, vecs, LabelMode::Internal, {}, {}), DataError);
}

}  // namespace
}  // namespace sataudit
