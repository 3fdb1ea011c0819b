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

#include <fstream>

#include "helpers.hpp"
#include "sataudit/errors.hpp"
#include "sataudit/logio.hpp"
#include "sataudit/synth.hpp"

namespace sataudit {
namespace {

using testing::click;
using testing::make_impression;

LogCorpus small_generated() {
  auto p = preset_params("mixed");
  p.users_per_profile = 20;
  p.n_informational = 60;
  p.n_navigational = 10;
  return generate(build_scenario(p)).first;
}

TEST(LogIo, EmptyInputGivesEmptyCorpus) {
  for (auto f : {LogFormat::Csv, LogFormat::Ndjson}) {
    auto c = ingest_text("", f);
    EXPECT_EQ(c.size(), 0u);
    EXPECT_EQ(c.stats.skipped, 0u);
  }
}

TEST(LogIo, EmitEmptyCorpus) {
  LogCorpus empty;
  const auto csv = emit_text(empty, LogFormat::Csv);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1);  // header only
  EXPECT_EQ(emit_text(empty, LogFormat::Ndjson), "");
  auto dir = testing::temp_dir("logio_empty");
  EXPECT_EQ(emit(empty, dir / "e.csv", LogFormat::Csv), 0u);
}

TEST(LogIo, InvalidRecordIsSkipped) {
  auto good = make_impression("a", "q", {}, {click("r1", 40, true)});
  auto bad = make_impression("b", "q", {}, {click("r99", 40, true, 2)});
  // Emit bypasses validation so we can plant a broken record.
  LogCorpus c;
  c.impressions = {good, bad};
  for (auto f : {LogFormat::Csv, LogFormat::Ndjson}) {
    auto back = ingest_text(emit_text(c, f), f);
    EXPECT_EQ(back.size(), 1u);
    EXPECT_EQ(back.stats.skipped, 1u);
    EXPECT_EQ(back.stats.accepted + back.stats.skipped, back.stats.total_records);
  }
  LogCorpus only_bad;
  only_bad.impressions = {bad};
  EXPECT_THROW(ingest_text(emit_text(only_bad, LogFormat::Csv), LogFormat::Csv), DataError);
}

TEST(LogIo, MostlyMalformedIsFatal) {
  const std::string text = "{\"nope\":1}\n{\"nope\":2}\n";
  EXPECT_THROW(ingest_text(text, LogFormat::Ndjson), DataError);
}

TEST(LogIo, UnreadableFileIsFatal) {
  EXPECT_THROW(ingest("/nonexistent/dir/x.csv", LogFormat::Csv), DataError);
}

TEST(LogIo, UnwritablePathIsFatal) {
  LogCorpus empty;
  EXPECT_THROW(emit(empty, "/nonexistent/dir/x.csv", LogFormat::Csv), DataError);
}

TEST(LogIo, RoundTripBothFormats) {
  const auto corpus = small_generated();
  ASSERT_GT(corpus.size(), 100u);
  for (auto f : {LogFormat::Csv, LogFormat::Ndjson}) {
    const auto text = emit_text(corpus, f, {"meta line"});
    auto back = ingest_text(text, f);
    ASSERT_EQ(back.size(), corpus.size());
    EXPECT_EQ(back.stats.skipped, 0u);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      ASSERT_EQ(back.impressions[i], corpus.impressions[i]) << i;
    }
    EXPECT_EQ(emit_text(back, f, {"meta line"}), text);
  }
}

TEST(LogIo, FileRoundTripAndCount) {
  const auto corpus = small_generated();
  auto dir = testing::temp_dir("logio_file");
  for (auto f : {LogFormat::Csv, LogFormat::Ndjson}) {
    auto path = dir / (f == LogFormat::Csv ? "c.csv" : "c.ndjson");
    EXPECT_EQ(emit(corpus, path, f), corpus.size());
    EXPECT_EQ(format_for_path(path), f);
    auto back = ingest(path, f);
    EXPECT_EQ(back.impressions, corpus.impressions);
  }
}

TEST(LogIo, QueriesNormalizedOnIngest) {
  LogCorpus c;
  auto imp = make_impression("a", "Cheap  Flights");
  c.impressions = {imp};
  auto back = ingest_text(emit_text(c, LogFormat::Csv), LogFormat::Csv);
  EXPECT_EQ(back.impressions[0].query_text, "cheap flights");
}

TEST(LogIo, ClicksOnlyCsvRoundTrip) {
  auto c = to_clicks_only(small_generated());
  auto back = ingest_text(emit_text(c, LogFormat::Csv), LogFormat::Csv);
  EXPECT_EQ(back.source, LogSource::External);
  EXPECT_EQ(back.impressions, c.impressions);
}

TEST(LogIo, CsvEscaping) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  auto f = split_csv_line("x,\"a,b\",\"q\"\"q\"");
  ASSERT_TRUE(f);
  EXPECT_EQ(*f, (std::vector<std::string>{"x", "a,b", "q\"q"}));
  EXPECT_FALSE(split_csv_line("\"unterminated"));
}

}  // namespace
}  // namespace sataudit
