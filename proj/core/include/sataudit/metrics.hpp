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

#ifndef SATAUDIT_METRICS_HPP_
#define SATAUDIT_METRICS_HPP_

// Per-impression behavioral satisfaction metrics.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "sataudit/logmodel.hpp"

namespace sataudit {

enum class MetricKind : std::uint8_t { GU = 0, Reform = 1, PCC = 2, SCC = 3 };
enum class Polarity : std::uint8_t { HigherBetter, LowerBetter };

inline constexpr std::array<MetricKind, 4> kMetricKinds = {
    MetricKind::GU, MetricKind::Reform, MetricKind::PCC, MetricKind::SCC};

std::string_view to_string(MetricKind kind);
std::optional<MetricKind> parse_metric_kind(std::string_view text);
Polarity polarity(MetricKind kind);

struct MetricConfig {
  double dwell_threshold_s = 30.0;
  // Reformulation heuristic for logs without an explicit flag: the next
  // in-session query shares at least this fraction of the original's tokens...
  double reform_token_overlap = 0.5;
  // ...or is within this normalized edit distance of it.
  double reform_edit_distance = 0.5;
};

// Graded-utility levels.
inline constexpr double kGuNoClick = -1.0;
inline constexpr double kGuUnsuccessful = -1.0 / 3.0;
inline constexpr double kGuHighEffort = 1.0 / 3.0;
inline constexpr double kGuLowEffort = 1.0;

struct MetricVector {
  double graded_utility = kGuNoClick;
  int reformulation = 0;
  int page_click_count = 0;
  int successful_click_count = 0;

  double value(MetricKind kind) const;
  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

// Clicks with dwell strictly greater than the threshold. Throws DataError
// when a click has no dwell time.
int successful_click_count(const Impression& imp,
                           double dwell_threshold_s = 30.0);
int page_click_count(const Impression& imp);
// Throws DataError when the flag is absent; derive it first.
int reformulation(const Impression& imp);
// +1: success with <= 2 clicks and no reformulation; +1/3: success
// otherwise; -1/3: clicks but no success; -1: no clicks.
double graded_utility(const Impression& imp, double dwell_threshold_s = 30.0);

MetricVector metric_vector(const Impression& imp,
                           const MetricConfig& cfg = MetricConfig{});
std::vector<MetricVector> metric_vectors(const LogCorpus& corpus,
                                         const MetricConfig& cfg = {});

// Clicks-only view: page_click_count set, the other fields left at their
// defaults. Works on logs without dwell times.
MetricVector click_only_vector(const Impression& imp);

// Levenshtein distance over bytes divided by the longer length.
double normalized_edit_distance(std::string_view a, std::string_view b);
// Fraction of `original`'s distinct tokens present in `next`.
double token_overlap(std::string_view original, std::string_view next);
// Whether `next` is a reformulation of `original` (identical re-issues are
// not).
bool is_reformulation(std::string_view original, std::string_view next,
                      const MetricConfig& cfg = MetricConfig{});

// Fills absent reformulated flags from session order (timestamp, then
// impression_id). The last impression of a session gets false. Returns the
// number of flags filled.
std::size_t derive_reformulation_flags(LogCorpus& corpus,
                                       const MetricConfig& cfg = {});

}  // namespace sataudit

#endif  // SATAUDIT_METRICS_HPP_
