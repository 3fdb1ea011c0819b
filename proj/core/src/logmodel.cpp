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

#include "sataudit/logmodel.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "sataudit/errors.hpp"

namespace sataudit {

std::string_view to_string(AgeGroup age) {
  switch (age) {
    case AgeGroup::G1: return "G1";
    case AgeGroup::G2: return "G2";
    case AgeGroup::G3: return "G3";
    case AgeGroup::G4: return "G4";
  }
  return "?";
}

std::string_view to_string(Gender gender) {
  return gender == Gender::Male ? "M" : "F";
}

std::optional<AgeGroup> parse_age_group(std::string_view text) {
  for (AgeGroup a : kAgeGroups) {
    if (text == to_string(a)) return a;
  }
  return std::nullopt;
}

std::optional<Gender> parse_gender(std::string_view text) {
  if (text == "M") return Gender::Male;
  if (text == "F") return Gender::Female;
  return std::nullopt;
}

std::string to_string(const DemographicProfile& profile) {
  std::string out(to_string(profile.age));
  out += '/';
  out += to_string(profile.gender);
  return out;
}

std::string_view to_string(Factor factor) {
  return factor == Factor::Age ? "age" : "gender";
}

std::optional<Factor> parse_factor(std::string_view text) {
  if (text == "age") return Factor::Age;
  if (text == "gender") return Factor::Gender;
  return std::nullopt;
}

int group_count(Factor factor) { return factor == Factor::Age ? 4 : 2; }

int group_of(const DemographicProfile& profile, Factor factor) {
  return factor == Factor::Age ? static_cast<int>(profile.age)
                               : static_cast<int>(profile.gender);
}

std::string group_label(Factor factor, int group) {
  if (factor == Factor::Age) {
    return std::string(to_string(static_cast<AgeGroup>(group)));
  }
  return std::string(to_string(static_cast<Gender>(group)));
}

std::string normalize_query(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(uc));
  }
  return out;
}

namespace {

bool has_reserved_char(std::string_view id) {
  return id.find_first_of("|;:,\n\r") != std::string_view::npos;
}

}  // namespace

std::optional<std::string> validate(const Impression& imp) {
  if (imp.impression_id.empty()) return "empty impression_id";
  if (imp.user_id.empty()) return "empty user_id";
  if (imp.session_id.empty()) return "empty session_id";
  if (imp.query_text.empty()) return "empty query_text";
  if (imp.results.empty()) return "results list is empty";
  std::set<std::string_view> seen;
  for (const auto& r : imp.results) {
    if (r.empty()) return "empty result_id";
    if (has_reserved_char(r)) return "result_id contains a reserved character";
    if (!seen.insert(r).second) return "duplicate result_id " + r;
  }
  int terminating = 0;
  for (const auto& c : imp.clicks) {
    if (!seen.contains(c.result_id)) {
      return "click on result_id " + c.result_id + " absent from results";
    }
    if (c.position < 1) return "click position < 1";
    if (c.dwell_seconds && !(*c.dwell_seconds >= 0.0)) {
      return "negative or non-finite dwell_seconds";
    }
    if (c.terminated_query) ++terminating;
  }
  if (terminating > 1) return "more than one terminating click";
  return std::nullopt;
}

bool is_clicks_only(const Impression& imp) {
  return std::any_of(imp.clicks.begin(), imp.clicks.end(),
                     [](const Click& c) { return !c.dwell_seconds; });
}

LogCorpus make_corpus(std::vector<Impression> impressions) {
  LogCorpus corpus;
  for (const auto& imp : impressions) {
    if (auto why = validate(imp)) {
      throw DataError("invalid impression " + imp.impression_id + ": " + *why);
    }
  }
  std::sort(impressions.begin(), impressions.end(),
            [](const Impression& a, const Impression& b) {
              return a.impression_id < b.impression_id;
            });
  for (std::size_t i = 1; i < impressions.size(); ++i) {
    if (impressions[i].impression_id == impressions[i - 1].impression_id) {
      throw DataError("duplicate impression_id " +
                      impressions[i].impression_id);
    }
  }
  corpus.source = std::any_of(impressions.begin(), impressions.end(),
                              [](const Impression& i) {
                                return is_clicks_only(i);
                              })
                      ? LogSource::External
                      : LogSource::Internal;
  corpus.stats.total_records = impressions.size();
  corpus.stats.accepted = impressions.size();
  corpus.impressions = std::move(impressions);
  return corpus;
}

LogCorpus to_clicks_only(const LogCorpus& corpus) {
  LogCorpus out = corpus;
  for (auto& imp : out.impressions) {
    imp.reformulated.reset();
    for (auto& c : imp.clicks) c.dwell_seconds.reset();
  }
  out.source = LogSource::External;
  return out;
}

}  // namespace sataudit
