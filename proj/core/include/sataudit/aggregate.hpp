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

#ifndef SATAUDIT_AGGREGATE_HPP_
#define SATAUDIT_AGGREGATE_HPP_

// Raw demographic comparison: query-averaged metric values, min-max
// normalization across groups, query-distribution divergence, and
// head/torso/tail traffic classes.

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sataudit/logmodel.hpp"
#include "sataudit/metrics.hpp"

namespace sataudit {

struct GroupScore {
  int group = 0;
  double raw = 0.0;
  // Standard error with queries as the sampling unit.
  double std_error = 0.0;
  std::size_t n_queries = 0;
  std::size_t n_impressions = 0;
};

struct RawScores {
  Factor factor = Factor::Age;
  // Indexed by MetricKind; only groups with at least one query appear, in
  // increasing group order.
  std::array<std::vector<GroupScore>, 4> by_metric;
  std::vector<std::string> warnings;

  const std::vector<GroupScore>& operator[](MetricKind k) const {
    return by_metric[static_cast<std::size_t>(k)];
  }
};

// Mean over a group's queries of the per-query mean over that group's
// impressions. `vectors[i]` belongs to `corpus.impressions[i]`. When
// `subset` is non-empty only those impression indices are used.
RawScores query_averaged_scores(const LogCorpus& corpus,
                                std::span<const MetricVector> vectors,
                                Factor factor,
                                std::span<const std::size_t> subset = {});

RawScores query_averaged_scores(const LogCorpus& corpus, Factor factor,
                                const MetricConfig& cfg = {});

struct NormalizedValues {
  std::vector<double> values;
  double min = 0.0;
  double max = 0.0;
  // max == min: every value reported as 0.
  bool degenerate = false;
};

// Affine map sending the minimum to 0 and the maximum to 1. Needs at least
// two values.
NormalizedValues normalize(std::span<const double> raw);

struct NormalizedPanel {
  MetricKind metric = MetricKind::GU;
  std::vector<GroupScore> groups;
  std::vector<double> normalized;
  std::vector<double> normalized_stderr;
  bool degenerate = false;
  // max - min of the raw group scores, and that gap over the pooled
  // standard error of the two extreme groups.
  double raw_gap = 0.0;
  double gap_in_stderrs = 0.0;
};

struct NormalizedGroupScores {
  Factor factor = Factor::Age;
  std::vector<NormalizedPanel> panels;  // one per MetricKind
  std::vector<std::string> warnings;

  const NormalizedPanel& operator[](MetricKind k) const {
    return panels[static_cast<std::size_t>(k)];
  }
};

// Normalizes each metric's panel separately.
NormalizedGroupScores normalize(const RawScores& scores);

using QueryCounts = std::map<std::string, std::size_t>;

// Impressions per query for one group of a factor.
QueryCounts group_query_counts(const LogCorpus& corpus, Factor factor,
                               int group);

// D(P_a || P_b) over the union vocabulary, with `alpha` added to every
// query's count before normalizing.
double smoothed_kl(const QueryCounts& a, const QueryCounts& b, double alpha);

double query_kl(const LogCorpus& corpus, Factor factor, int group_a,
                int group_b, double smoothing_alpha = 0.5);

enum class QueryClass { Head, Torso, Tail };
std::string_view to_string(QueryClass c);

// Queries sorted by traffic (descending, ties by query text); the first
// ceil(0.2 n) are head, the last floor(0.3 n) tail.
std::map<std::string, QueryClass> head_tail_classify(const QueryCounts& counts);
std::map<std::string, QueryClass> head_tail_classify(const LogCorpus& corpus);

}  // namespace sataudit

#endif  // SATAUDIT_AGGREGATE_HPP_
