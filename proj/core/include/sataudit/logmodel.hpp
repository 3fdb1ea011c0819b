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

#ifndef SATAUDIT_LOGMODEL_HPP_
#define SATAUDIT_LOGMODEL_HPP_

// Impression log schema and demographic types.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sataudit {

// Generational age bins: <18, 18-34, 35-54, 55-74.
enum class AgeGroup : std::uint8_t { G1 = 0, G2 = 1, G3 = 2, G4 = 3 };
enum class Gender : std::uint8_t { Male = 0, Female = 1 };

inline constexpr std::array<AgeGroup, 4> kAgeGroups = {
    AgeGroup::G1, AgeGroup::G2, AgeGroup::G3, AgeGroup::G4};
inline constexpr std::array<Gender, 2> kGenders = {Gender::Male,
                                                   Gender::Female};
inline constexpr int kNumProfiles = 8;

std::string_view to_string(AgeGroup age);
std::string_view to_string(Gender gender);  // "M" / "F"
std::optional<AgeGroup> parse_age_group(std::string_view text);
std::optional<Gender> parse_gender(std::string_view text);

struct DemographicProfile {
  AgeGroup age = AgeGroup::G1;
  Gender gender = Gender::Male;

  // Dense index in [0, 8): age-major.
  constexpr int index() const {
    return static_cast<int>(age) * 2 + static_cast<int>(gender);
  }
  static constexpr DemographicProfile from_index(int i) {
    return {static_cast<AgeGroup>(i / 2), static_cast<Gender>(i % 2)};
  }
  friend constexpr auto operator<=>(const DemographicProfile&,
                                    const DemographicProfile&) = default;
};

std::string to_string(const DemographicProfile& profile);  // "G3/F"

// Which demographic projection an audit compares.
enum class Factor : std::uint8_t { Age, Gender };

std::string_view to_string(Factor factor);
std::optional<Factor> parse_factor(std::string_view text);
int group_count(Factor factor);
int group_of(const DemographicProfile& profile, Factor factor);
std::string group_label(Factor factor, int group);

struct Click {
  std::string result_id;
  int position = 1;  // 1-based rank on the page
  // Absent in clicks-only (external) logs.
  std::optional<double> dwell_seconds;
  bool terminated_query = false;

  friend bool operator==(const Click&, const Click&) = default;
};

struct Impression {
  std::string impression_id;
  std::string user_id;
  std::string session_id;
  std::int64_t timestamp = 0;
  std::string query_text;
  std::string topic;
  std::vector<std::string> results;
  std::vector<Click> clicks;  // in order of occurrence
  // Absent when the log does not carry it; see derive_reformulation_flags.
  std::optional<bool> reformulated;
  DemographicProfile demographics;
  // Query-level label when the source provides one.
  std::optional<bool> navigational;

  friend bool operator==(const Impression&, const Impression&) = default;
};

enum class LogSource : std::uint8_t { Internal, External };

struct IngestStats {
  std::size_t total_records = 0;
  std::size_t accepted = 0;
  std::size_t skipped = 0;
  // First few skip reasons, "record N: reason".
  std::vector<std::string> diagnostics;
};

struct LogCorpus {
  // Sorted by impression_id; ids are unique.
  std::vector<Impression> impressions;
  LogSource source = LogSource::Internal;
  IngestStats stats;

  std::size_t size() const { return impressions.size(); }
  bool empty() const { return impressions.empty(); }
};

// Lowercase, trim, collapse internal whitespace runs to one space.
std::string normalize_query(std::string_view text);

// Returns the first violated invariant, or nullopt for a valid impression.
std::optional<std::string> validate(const Impression& imp);

// True when any click lacks a dwell time (clicks-only log fidelity).
bool is_clicks_only(const Impression& imp);

// Sorts by impression_id and fails on duplicate ids or invalid records.
// Sets source to External when any impression is clicks-only.
LogCorpus make_corpus(std::vector<Impression> impressions);

// Drops dwell times and reformulation flags, producing the clicks-only view
// an outside auditor would have.
LogCorpus to_clicks_only(const LogCorpus& corpus);

}  // namespace sataudit

#endif  // SATAUDIT_LOGMODEL_HPP_
