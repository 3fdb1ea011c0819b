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

#include <string>

#include "helpers.hpp"
#include "sataudit/errors.hpp"
#include "sataudit/matching.hpp"
#include "sataudit/synth.hpp"

namespace sataudit {
namespace {

using testing::click;
using testing::make_impression;

Impression nav_imp(AgeGroup age, int i, const std::string& final_result,
                   double dwell = 90.0) {
  auto imp = make_impression(std::string(to_string(age)) + "-" + std::to_string(i),
                             "facebook", {age, Gender::Male},
                             {click(final_result, dwell, true)});
  imp.navigational = true;
  return imp;
}

std::vector<Impression> fixed_point(int per_group = 10) {
  std::vector<Impression> imps;
  for (AgeGroup a : kAgeGroups) {
    for (int i = 0; i < per_group; ++i) imps.push_back(nav_imp(a, i, "r1"));
  }
  return imps;
}

TEST(Matching, ConfigValidation) {
  MatchFilterConfig c;
  EXPECT_NO_THROW(c.validate());
  c.min_impressions_per_group = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.serp_prefix_len = 0;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(Matching, FinalSuccessfulClick) {
  auto imp = make_impression("a", "q", {}, {click("r2", 60, true)});
  EXPECT_EQ(final_successful_click(imp, 30), "r2");
  imp.clicks = {click("r2", 5, true)};
  EXPECT_FALSE(final_successful_click(imp, 30));
  imp.clicks = {click("r2", 60, false)};
  EXPECT_FALSE(final_successful_click(imp, 30));
}

TEST(Matching, DominantResult) {
  std::vector<Impression> imps;
  for (int i = 0; i < 5; ++i) imps.push_back(nav_imp(AgeGroup::G1, i, "r1"));
  for (int i = 5; i < 7; ++i) imps.push_back(nav_imp(AgeGroup::G1, i, "r2"));
  std::vector<const Impression*> ptrs;
  for (const auto& i : imps) ptrs.push_back(&i);
  EXPECT_EQ(dominant_result(ptrs, 30), "r1");

  std::vector<Impression> tie;
  for (int i = 0; i < 3; ++i) tie.push_back(nav_imp(AgeGroup::G1, i, "r3"));
  for (int i = 3; i < 6; ++i) tie.push_back(nav_imp(AgeGroup::G1, i, "r2"));
  ptrs.clear();
  for (const auto& i : tie) ptrs.push_back(&i);
  EXPECT_EQ(dominant_result(ptrs, 30), "r2");

  auto none = make_impression("x");
  std::vector<const Impression*> empty = {&none};
  EXPECT_FALSE(dominant_result(empty, 30));
}

TEST(Matching, SerpSignature) {
  auto a = make_impression("a");
  auto b = a;
  b.results[8] = "other";
  EXPECT_EQ(serp_signature(a, 8), serp_signature(b, 8));
  auto swapped = a;
  std::swap(swapped.results[0], swapped.results[1]);
  EXPECT_NE(serp_signature(a, 8), serp_signature(swapped, 8));
  auto three = a;
  three.results = {"r1", "r2", "r3"};
  EXPECT_NE(serp_signature(three, 8), serp_signature(a, 8));
  // Only the prefix actually present is hashed.
  EXPECT_EQ(serp_signature(three, 8), serp_signature(a, 3));
}

TEST(Matching, FixedPointCohortEqualsInput) {
  auto corpus = make_corpus(fixed_point());
  auto cohort = match_contexts(corpus, Factor::Age);
  EXPECT_EQ(cohort.impressions.size(), corpus.size());
  const auto& s = cohort.impressions_per_stage;
  EXPECT_EQ(s.input, 40u);
  EXPECT_EQ(s.after_recheck, 40u);
  EXPECT_EQ(cohort.queries_per_stage.after_recheck, 1u);
}

TEST(Matching, InformationalOnlyGivesEmptyCohort) {
  auto imps = fixed_point();
  for (auto& i : imps) i.navigational = false;
  auto cohort = match_contexts(make_corpus(imps), Factor::Age);
  EXPECT_TRUE(cohort.empty());
  EXPECT_EQ(cohort.impressions_per_stage.input, 40u);
  EXPECT_EQ(cohort.impressions_per_stage.after_navigational, 0u);
  auto corpus = make_corpus(imps);
  auto vectors = metric_vectors(corpus);
  EXPECT_THROW(matched_scores(corpus, vectors, cohort), DataError);
}

TEST(Matching, NavigationalProxyFromConcentration) {
  auto imps = fixed_point();
  for (auto& i : imps) i.navigational.reset();
  EXPECT_EQ(match_contexts(make_corpus(imps), Factor::Age).impressions.size(), 40u);
  // Spread final clicks over five results: not navigational.
  for (std::size_t i = 0; i < imps.size(); ++i) {
    imps[i].clicks = {click("r" + std::to_string(1 + i % 5), 90, true)};
  }
  EXPECT_TRUE(match_contexts(make_corpus(imps), Factor::Age).empty());
}

TEST(Matching, FiltersDropMismatchedContexts) {
  auto imps = fixed_point(12);
  // One mismatch each in G1, G2 and G3 keeps every group at 11.
  imps[0].clicks = {click("r2", 90, true)};            // other final click
  imps[12].clicks = {click("r1", 5, true)};            // not successful
  std::swap(imps[24].results[0], imps[24].results[1]);  // other page
  auto corpus = make_corpus(imps);
  auto cohort = match_contexts(corpus, Factor::Age);
  EXPECT_EQ(cohort.impressions.size(), imps.size() - 3);
  const auto& s = cohort.impressions_per_stage;
  EXPECT_GE(s.input, s.after_navigational);
  EXPECT_GE(s.after_navigational, s.after_min_impressions);
  EXPECT_GE(s.after_min_impressions, s.after_final_click);
  EXPECT_GE(s.after_final_click, s.after_serp);
  EXPECT_GE(s.after_serp, s.after_recheck);
  EXPECT_EQ(s.after_final_click, imps.size() - 2);
}

TEST(Matching, RecheckDropsThinQueries) {
  auto imps = fixed_point(10);
  imps[0].clicks = {click("r2", 90, true)};  // G1 falls to 9 after stage 3
  auto cohort = match_contexts(make_corpus(imps), Factor::Age);
  EXPECT_TRUE(cohort.empty());
  EXPECT_EQ(cohort.impressions_per_stage.after_serp, 39u);
  EXPECT_EQ(cohort.impressions_per_stage.after_recheck, 0u);
}

TEST(Matching, MinImpressionsPerGroup) {
  auto imps = fixed_point(10);
  imps.pop_back();  // G4 has 9
  auto cohort = match_contexts(make_corpus(imps), Factor::Age);
  EXPECT_EQ(cohort.impressions_per_stage.after_min_impressions, 0u);
  // By gender all 39 are male: the female group is missing.
  EXPECT_TRUE(match_contexts(make_corpus(imps), Factor::Gender).empty());
}

TEST(Matching, GeneratedCohortInvariants) {
  auto p = preset_params("null");
  p.users_per_profile = 300;
  auto corpus = generate(build_scenario(p)).first;
  MatchFilterConfig cfg;
  auto cohort = match_contexts(corpus, Factor::Age, cfg);
  ASSERT_FALSE(cohort.empty());
  for (const auto& [query, idx] : cohort.by_query) {
    std::vector<const Impression*> ptrs;
    std::map<std::uint64_t, int> sigs;
    std::array<int, 4> per_group{};
    for (auto i : idx) {
      ptrs.push_back(&corpus.impressions[i]);
      ++sigs[serp_signature(corpus.impressions[i], cfg.serp_prefix_len)];
      ++per_group[group_of(corpus.impressions[i].demographics, Factor::Age)];
      EXPECT_EQ(corpus.impressions[i].query_text, query);
    }
    const auto dom = dominant_result(ptrs, cfg.dwell_threshold_s);
    for (auto i : idx) {
      EXPECT_EQ(final_successful_click(corpus.impressions[i], 30), dom);
    }
    EXPECT_EQ(sigs.size(), 1u);
    for (int n : per_group) EXPECT_GE(n, cfg.min_impressions_per_group);
  }
  // Composition: matched scores equal aggregate on the subset.
  auto v = metric_vectors(corpus);
  auto via_match = matched_scores(corpus, v, cohort);
  auto via_agg = normalize(query_averaged_scores(corpus, v, Factor::Age, cohort.impressions));
  for (MetricKind k : kMetricKinds) {
    EXPECT_EQ(via_match[k].normalized, via_agg[k].normalized);
  }
}

TEST(Matching, JointComparisonFlagsDivergence) {
  RawScores raw, matched;
  auto set = [](RawScores& s, MetricKind k, std::vector<double> vals) {
    auto& v = s.by_metric[static_cast<std::size_t>(k)];
    for (std::size_t g = 0; g < vals.size(); ++g) v.push_back({static_cast<int>(g), vals[g]});
  };
  for (MetricKind k : kMetricKinds) {
    set(raw, k, {0.0, 0.5, 1.0, 1.0});
    set(matched, k, {2.0, 2.01, 2.0, 2.0});
  }
  auto cmp = compare_raw_matched(raw, matched);
  EXPECT_TRUE(cmp.raw_matched_divergence);
  // One axis for both views: [0, 2.01].
  EXPECT_NEAR(cmp.panels[0].raw_gap, 1.0 / 2.01, 1e-12);
  EXPECT_NEAR(cmp.panels[0].matched_gap, 0.01 / 2.01, 1e-12);
}

}  // namespace
}  // namespace sataudit
