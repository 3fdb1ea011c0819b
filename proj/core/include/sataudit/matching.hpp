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

#ifndef SATAUDIT_MATCHING_HPP_
#define SATAUDIT_MATCHING_HPP_

// Context matching: restrict the log to near-identical impression contexts
// (same navigational query, same final successful click, same results page)
// before comparing groups.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sataudit/aggregate.hpp"
#include "sataudit/logmodel.hpp"
#include "sataudit/metrics.hpp"

namespace sataudit {

struct MatchFilterConfig {
  int min_impressions_per_group = 10;
  int serp_prefix_len = 8;
  bool require_navigational = true;
  double dwell_threshold_s = 30.0;
  // Unlabeled queries count as navigational when at least this share of
  // their final successful clicks land on one result.
  double navigational_concentration = 0.8;

  void validate() const;
};

struct Attrition {
  std::size_t input = 0;
  std::size_t after_navigational = 0;
  std::size_t after_min_impressions = 0;
  std::size_t after_final_click = 0;
  std::size_t after_serp = 0;
  std::size_t after_recheck = 0;
};

struct MatchedCohort {
  Factor factor = Factor::Age;
  // Surviving impression indices into the corpus, ascending.
  std::vector<std::size_t> impressions;
  // Surviving impressions grouped by query.
  std::map<std::string, std::vector<std::size_t>> by_query;
  Attrition impressions_per_stage;
  Attrition queries_per_stage;

  bool empty() const { return impressions.empty(); }
};

// Result of the terminating click when its dwell exceeds the threshold.
std::optional<std::string> final_successful_click(const Impression& imp,
                                                  double dwell_threshold_s);

// Result with the most final successful clicks among the impressions, ties
// to the lexicographically smallest id. nullopt means the query has no
// final successful click and is dropped.
std::optional<std::string> dominant_result(
    std::span<const Impression* const> query_impressions,
    double dwell_threshold_s);

// Order-sensitive FNV-1a hash of the first `prefix_len` result ids and the
// prefix length actually used.
std::uint64_t serp_signature(const Impression& imp, int prefix_len);

// Label from the log when present (majority over the query's impressions),
// else the click-concentration proxy.
bool is_navigational(std::span<const Impression* const> query_impressions,
                     const MatchFilterConfig& cfg);

// (1) navigational queries, (2) >= min impressions from every group,
// (3) final successful click on the query's dominant result, (4) modal SERP
// signature, (5) re-check of (2). Statistics for (3) and (4) come from the
// stage-2 output. An empty result is a valid "no matched context" outcome.
MatchedCohort match_contexts(const LogCorpus& corpus, Factor factor,
                             const MatchFilterConfig& cfg = {});

// Query-averaged, normalized scores on the matched subset.
NormalizedGroupScores matched_scores(const LogCorpus& corpus,
                                     std::span<const MetricVector> vectors,
                                     const MatchedCohort& cohort);

struct PanelGap {
  MetricKind metric = MetricKind::GU;
  double raw_gap = 0.0;      // spread of raw-view groups on the shared scale
  double matched_gap = 0.0;  // spread of matched-view groups on it
  bool diverges = false;
};

struct ContextComparison {
  Factor factor = Factor::Age;
  std::vector<PanelGap> panels;
  // raw_gap >= raw_threshold while every matched gap <= matched_threshold.
  bool raw_matched_divergence = false;
};

// Normalizes raw and matched group scores jointly per metric (one axis for
// both views) and compares the between-group spread.
ContextComparison compare_raw_matched(const RawScores& raw,
                                      const RawScores& matched,
                                      double raw_threshold = 0.15,
                                      double matched_threshold = 0.05);

}  // namespace sataudit

#endif  // SATAUDIT_MATCHING_HPP_
