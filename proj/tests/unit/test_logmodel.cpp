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

#include "helpers.hpp"
#include "sataudit/errors.hpp"
#include "sataudit/logmodel.hpp"

namespace sataudit {
namespace {

using testing::click;
using testing::make_impression;

TEST(LogModel, AgeGroupsAreOrderedAndParse) {
  EXPECT_EQ(kAgeGroups.size(), 4u);
  EXPECT_LT(AgeGroup::G1, AgeGroup::G4);
  for (AgeGroup a : kAgeGroups) EXPECT_EQ(parse_age_group(to_string(a)), a);
  EXPECT_FALSE(parse_age_group("G5"));
  EXPECT_EQ(parse_gender("M"), Gender::Male);
  EXPECT_EQ(parse_gender("F"), Gender::Female);
  EXPECT_FALSE(parse_gender("X"));
}

TEST(LogModel, ProfileIndexRoundTrips) {
  for (int i = 0; i < kNumProfiles; ++i) {
    EXPECT_EQ(DemographicProfile::from_index(i).index(), i);
  }
  EXPECT_EQ(to_string(DemographicProfile{AgeGroup::G3, Gender::Female}), "G3/F");
}

TEST(LogModel, FactorGroups) {
  DemographicProfile p{AgeGroup::G2, Gender::Female};
  EXPECT_EQ(group_count(Factor::Age), 4);
  EXPECT_EQ(group_count(Factor::Gender), 2);
  EXPECT_EQ(group_of(p, Factor::Age), 1);
  EXPECT_EQ(group_of(p, Factor::Gender), 1);
  EXPECT_EQ(group_label(Factor::Age, 3), "G4");
  EXPECT_EQ(parse_factor("gender"), Factor::Gender);
}

TEST(LogModel, NormalizeQuery) {
  EXPECT_EQ(normalize_query("  Cheap   FLIGHTS\tto Boston "), "cheap flights to boston");
  EXPECT_EQ(normalize_query(""), "");
}

TEST(LogModel, ValidateCatchesInvariantViolations) {
  auto ok = make_impression("a", "q", {}, {click("r1", 40, true)});
  EXPECT_FALSE(validate(ok));

  auto absent = ok;
  absent.clicks = {click("r99", 10, false, 3)};
  EXPECT_TRUE(validate(absent));

  auto dup = ok;
  dup.results = {"r1", "r1"};
  EXPECT_TRUE(validate(dup));

  auto two_terminal = ok;
  two_terminal.clicks = {click("r1", 40, true), click("r2", 40, true)};
  EXPECT_TRUE(validate(two_terminal));

  auto negative = ok;
  negative.clicks = {click("r1", -1.0)};
  EXPECT_TRUE(validate(negative));

  auto bad_pos = ok;
  bad_pos.clicks = {click("r1", 5.0)};
  bad_pos.clicks[0].position = 0;
  EXPECT_TRUE(validate(bad_pos));

  auto empty_results = ok;
  empty_results.results.clear();
  empty_results.clicks.clear();
  EXPECT_TRUE(validate(empty_results));
}

TEST(LogModel, MakeCorpusSortsAndRejectsDuplicates) {
  auto corpus = make_corpus({make_impression("b"), make_impression("a")});
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus.impressions[0].impression_id, "a");
  EXPECT_EQ(corpus.source, LogSource::Internal);
  EXPECT_THROW(make_corpus({make_impression("a"), make_impression("a")}), DataError);
}

TEST(LogModel, ClicksOnlyView) {
  auto corpus = make_corpus({make_impression("a", "q", {}, {click("r1", 40, true)})});
  auto ext = to_clicks_only(corpus);
  EXPECT_EQ(ext.source, LogSource::External);
  EXPECT_FALSE(ext.impressions[0].clicks[0].dwell_seconds);
  EXPECT_TRUE(is_clicks_only(ext.impressions[0]));
}

}  // namespace
}  // namespace sataudit
