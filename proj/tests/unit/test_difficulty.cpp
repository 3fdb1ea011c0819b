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
#include "sataudit/difficulty.hpp"
#include "sataudit/metrics.hpp"
#include "sataudit/synth.hpp"

namespace sataudit {
namespace {

using testing::click;
using testing::make_impression;

TEST(Difficulty, DescendingPercentiles) {
  std::vector<double> two = {1.0, -1.0};
  EXPECT_EQ(descending_percentiles(two), (std::vector<double>{0.0, 1.0}));
  std::vector<double> one = {0.3};
  EXPECT_EQ(descending_percentiles(one), (std::vector<double>{0.5}));
  std::vector<double> ties = {1.0, 0.0, 0.0, -1.0};
  EXPECT_EQ(descending_percentiles(ties), (std::vector<double>{0.0, 0.5, 0.5, 1.0}));
}

TEST(Difficulty, TwoPointRanking) {
  GroupQueryMeans means(1);
  means[0] = {{"qa", 1.0}, {"qb", -1.0}};
  auto t = estimate_difficulty(means);
  EXPECT_EQ(t.difficulty.at("qa"), 0.0);
  EXPECT_EQ(t.difficulty.at("qb"), 1.0);
}

TEST(Difficulty, IdenticalPercentileAveragesToItself) {
  GroupQueryMeans means(4);
  for (auto& g : means) g = {{"q1", 0.9}, {"q2", 0.1}, {"q3", -0.5}};
  auto t = estimate_difficulty(means);
  EXPECT_EQ(t.difficulty.at("q2"), 0.5);
  for (const auto& g : t.group_percentiles) EXPECT_EQ(g.at("q2"), 0.5);
}

TEST(Difficulty, MissingGroupsAveragedOverPresentOnly) {
  GroupQueryMeans means(2);
  means[0] = {{"a", 1.0}, {"b", 0.0}};
  means[1] = {{"a", 0.0}, {"c", 1.0}};
  auto t = estimate_difficulty(means);
  EXPECT_EQ(t.difficulty.at("b"), 1.0);
  EXPECT_EQ(t.difficulty.at("a"), 0.5);
  EXPECT_EQ(t.difficulty.at("c"), 0.0);
  EXPECT_FALSE(t.lookup("zzz"));
}

TEST(Difficulty, MonotoneTransformInvariance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GroupQueryMeans means(4);
  for (int g = 0; g < 4; ++g) {
    for (int q = 0; q < 50; ++q) {
      if (rng() % 4 == 0) continue;
      means[g]["q" + std::to_string(q)] = std::round(u(rng) * 3.0) / 3.0;
    }
  }
  const auto base = estimate_difficulty(means);
  auto transformed = means;
  for (auto& [q, v] : transformed[2]) v = std::exp(3.0 * v) - 7.0;
  const auto t = estimate_difficulty(transformed);
  EXPECT_EQ(t.difficulty, base.difficulty);
}

TEST(Difficulty, AntiMonotoneAndInRange) {
  auto p = preset_params("null");
  p.users_per_profile = 200;
  auto corpus = generate(build_scenario(p)).first;
  auto v = metric_vectors(corpus);
  auto means = mean_graded_utility(corpus, v, Factor::Age);
  auto t = estimate_difficulty(corpus, v);
  for (const auto& [q, d] : t.difficulty) {
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
  }
  // Pairs ordered the same way in every group that has both.
  int checked = 0;
  for (auto it1 = t.difficulty.begin(); it1 != t.difficulty.end() && checked < 2000; ++it1) {
    for (auto it2 = std::next(it1); it2 != t.difficulty.end() && checked < 2000; ++it2) {
      // Restricted to queries every group issued, so both averages run over
      // the same groups.
      bool all_lower = true, in_all = true;
      for (const auto& g : means) {
        auto a = g.find(it1->first), b = g.find(it2->first);
        if (a == g.end() || b == g.end()) {
          in_all = false;
          break;
        }
        all_lower = all_lower && a->second < b->second;
      }
      if (in_all && all_lower) {
        ++checked;
        EXPECT_GT(it1->second, it2->second);
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Difficulty, EqualMeansAreBitIdentical) {
  // Means are exact rationals on the thirds grid, independent of the
  // order in which impressions are summed.
  std::vector<Impression> imps;
  auto add = [&](const std::string& q, std::vector<double> dwell_pattern) {
    for (double d : dwell_pattern) {
      std::string id = q + std::to_string(imps.size());
      std::vector<Click> clicks;
      if (d > 0) clicks.push_back(click("r1", d, true));
      if (d < 0) clicks.push_back(click("r1", 5, true));
      imps.push_back(make_impression(id, q, {}, clicks));
    }
  };
  add("a", {60, 60, 0});   // +1, +1, -1
  add("b", {-1, 60, 60});  // -1/3, +1, +1
  auto corpus = make_corpus(imps);
  auto vecs = metric_vectors(corpus);
  auto means = mean_graded_utility(corpus, vecs, Factor::Age);
  EXPECT_EQ(means[0].at("a"), 1.0 / 3.0);
  EXPECT_EQ(means[0].at("b"), 5.0 / 9.0);
}

}  // namespace
}  // namespace sataudit
