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

#include <random>

#include "helpers.hpp"
#include "sataudit/aggregate.hpp"
#include "sataudit/errors.hpp"
#include "sataudit/synth.hpp"

namespace sataudit {
namespace {

using testing::click;
using testing::make_impression;

std::vector<Click> n_clicks(int n) {
  std::vector<Click> out;
  for (int i = 1; i <= n; ++i) out.push_back(click("r" + std::to_string(i), 5.0));
  return out;
}

TEST(Aggregate, SingleQueryMean) {
  auto corpus = make_corpus({make_impression("a", "q", {}, n_clicks(1)),
                             make_impression("b", "q", {}, n_clicks(3))});
  auto s = query_averaged_scores(corpus, Factor::Age);
  ASSERT_EQ(s[MetricKind::PCC].size(), 1u);
  EXPECT_DOUBLE_EQ(s[MetricKind::PCC][0].raw, 2.0);
  EXPECT_EQ(s[MetricKind::PCC][0].n_impressions, 2u);
}

TEST(Aggregate, QueryAveragingNotImpressionAveraging) {
  std::vector<Impression> imps;
  for (int i = 0; i < 99; ++i) {
    imps.push_back(make_impression("a" + std::to_string(i), "q1", {}, n_clicks(4)));
  }
  imps.push_back(make_impression("b", "q2"));
  auto s = query_averaged_scores(make_corpus(imps), Factor::Age);
  EXPECT_DOUBLE_EQ(s[MetricKind::PCC][0].raw, 2.0);
  EXPECT_EQ(s[MetricKind::PCC][0].n_queries, 2u);
  EXPECT_DOUBLE_EQ(s[MetricKind::PCC][0].std_error, 2.0);  // sd 2*sqrt(2) / sqrt(2)
}

TEST(Aggregate, EmptyGroupsExcludedWithWarning) {
  auto corpus = make_corpus({make_impression("a")});
  auto s = query_averaged_scores(corpus, Factor::Age);
  EXPECT_EQ(s[MetricKind::GU].size(), 1u);
  EXPECT_FALSE(s.warnings.empty());
}

TEST(Aggregate, SubsetRestrictsImpressions) {
  auto corpus = make_corpus({make_impression("a", "q", {}, n_clicks(1)),
                             make_impression("b", "q", {}, n_clicks(3))});
  auto v = metric_vectors(corpus);
  std::vector<std::size_t> subset = {1};
  auto s = query_averaged_scores(corpus, v, Factor::Age, subset);
  EXPECT_DOUBLE_EQ(s[MetricKind::PCC][0].raw, 3.0);
}

TEST(Aggregate, NormalizeExamples) {
  std::vector<double> raw = {2, 4, 6, 8};
  auto n = normalize(raw);
  EXPECT_EQ(n.values, (std::vector<double>{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}));
  EXPECT_FALSE(n.degenerate);

  std::vector<double> flat = {5, 5};
  auto d = normalize(flat);
  EXPECT_EQ(d.values, (std::vector<double>{0.0, 0.0}));
  EXPECT_TRUE(d.degenerate);

  std::vector<double> one = {1.0};
  EXPECT_THROW(normalize(one), DataError);
}

TEST(Aggregate, NormalizePropertiesOnRandomInputs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(2 + trial % 6);
    for (auto& x : raw) x = u(rng);
    auto n = normalize(raw);
    EXPECT_EQ(*std::min_element(n.values.begin(), n.values.end()), 0.0);
    EXPECT_EQ(*std::max_element(n.values.begin(), n.values.end()), 1.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      for (std::size_t j = 0; j < raw.size(); ++j) {
        if (raw[i] < raw[j]) EXPECT_LE(n.values[i], n.values[j]);
      }
    }
    auto again = normalize(n.values);  // idempotent
    EXPECT_EQ(again.values, n.values);
  }
}

TEST(Aggregate, SmoothedKl) {
  QueryCounts a = {{"x", 5}, {"y", 3}};
  EXPECT_DOUBLE_EQ(smoothed_kl(a, a, 0.5), 0.0);
  QueryCounts b = {{"x", 1}, {"z", 9}};
  EXPECT_GT(smoothed_kl(a, b, 0.5), 0.0);
  // Proportional counts smooth to different distributions unless equal.
  QueryCounts a2 = {{"x", 10}, {"y", 6}};
  EXPECT_GT(smoothed_kl(a, a2, 0.5), 0.0);
  std::mt19937_64 rng(11);
  for (int t = 0; t < 100; ++t) {
    QueryCounts p, q;
    for (int k = 0; k < 5; ++k) {
      p["q" + std::to_string(k)] = rng() % 7;
      q["q" + std::to_string(k + rng() % 3)] = rng() % 7;
    }
    EXPECT_GE(smoothed_kl(p, q, 0.5), 0.0);
  }
}

TEST(Aggregate, HeadTailTenEqualQueries) {
  QueryCounts counts;
  for (int i = 0; i < 10; ++i) counts["q" + std::to_string(i)] = 5;
  auto classes = head_tail_classify(counts);
  int head = 0, torso = 0, tail = 0;
  for (const auto& [q, c] : classes) {
    head += c == QueryClass::Head;
    torso += c == QueryClass::Torso;
    tail += c == QueryClass::Tail;
  }
  EXPECT_EQ(head, 2);
  EXPECT_EQ(tail, 3);
  EXPECT_EQ(torso, 5);
  EXPECT_EQ(classes.at("q0"), QueryClass::Head);  // ties by query text
  EXPECT_EQ(classes.at("q9"), QueryClass::Tail);
}

TEST(Aggregate, HeadTailSingleQueryAndPartition) {
  EXPECT_EQ(head_tail_classify(QueryCounts{{"only", 1}}).at("only"), QueryClass::Head);
  for (int n = 1; n <= 40; ++n) {
    QueryCounts counts;
    for (int i = 0; i < n; ++i) counts["q" + std::to_string(i)] = static_cast<std::size_t>(i * 7 % 5);
    EXPECT_EQ(head_tail_classify(counts).size(), static_cast<std::size_t>(n));
  }
}

TEST(Aggregate, NullScenarioGroupsAgree) {
  auto p = preset_params("null");
  p.users_per_profile = 600;
  auto corpus = generate(build_scenario(p)).first;
  auto s = query_averaged_scores(corpus, Factor::Age);
  for (MetricKind k : kMetricKinds) {
    const auto& g = s[k];
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (std::size_t j = i + 1; j < g.size(); ++j) {
        // The two-standard-error intervals overlap.
        EXPECT_LE(std::abs(g[i].raw - g[j].raw), 2.0 * (g[i].std_error + g[j].std_error))
            << to_string(k);
      }
    }
  }
}

TEST(Aggregate, QueryMixKlOrdering) {
  auto p = preset_params("query_mix_confound");
  p.users_per_profile = 500;
  auto corpus = generate(build_scenario(p)).first;
  EXPECT_LT(query_kl(corpus, Factor::Age, 0, 1), query_kl(corpus, Factor::Age, 0, 3));
}

}  // namespace
}  // namespace sataudit
