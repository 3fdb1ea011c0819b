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

#ifndef SATAUDIT_REPORT_HPP_
#define SATAUDIT_REPORT_HPP_

// Plain-text report writers. Every CSV starts with one `#` metadata line and
// every JSON document carries a "meta" object, so any output can be traced
// back to the version, seed and configuration that produced it.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sataudit/aggregate.hpp"
#include "sataudit/matching.hpp"
#include "sataudit/mlm.hpp"
#include "sataudit/pairwise.hpp"

namespace sataudit {

std::string_view library_version();

struct RunMetadata {
  std::uint64_t seed = 0;
  std::string config_hash;  // fnv1a_hex of the effective configuration
};

// "# sataudit 0.1.0 seed=7 config_hash=..." plus a newline.
std::string metadata_line(const RunMetadata& meta);
// Inserts a leading "meta" member into a JSON object document.
std::string with_metadata(std::string_view json_object, const RunMetadata& meta);

std::string metrics_csv(const LogCorpus& corpus,
                        std::span<const MetricVector> vectors,
                        const RunMetadata& meta);

// metric,group,raw,normalized,stderr,normalized_stderr,n_queries,n_impressions
std::string aggregate_csv(const NormalizedGroupScores& scores,
                          const RunMetadata& meta);

std::string comparison_csv(const ContextComparison& cmp, const RunMetadata& meta);

std::string attrition_csv(const MatchedCohort& cohort, const RunMetadata& meta);

// Symmetric table of smoothed query-distribution divergences between groups.
std::string query_kl_csv(const LogCorpus& corpus, Factor factor,
                         const RunMetadata& meta);

std::string query_class_csv(const LogCorpus& corpus, const RunMetadata& meta);

std::string prediction_grid_csv(const MultilevelFit& fit,
                                std::span<const GridRow> rows,
                                const RunMetadata& meta);

std::string pair_grid_csv(const AgeGrid& grid, const RunMetadata& meta);

std::string difficulty_csv(const DifficultyTable& table, const RunMetadata& meta);

// Parses a CSV written by this module, skipping '#' lines. Rows keyed by
// the header names.
std::vector<std::map<std::string, std::string>> read_report_csv(std::string_view text);

}  // namespace sataudit

#endif  // SATAUDIT_REPORT_HPP_
