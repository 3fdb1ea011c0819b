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

#ifndef SATAUDIT_DIFFICULTY_HPP_
#define SATAUDIT_DIFFICULTY_HPP_

// Query difficulty that does not lean on any one group's behavior: each
// group ranks its own queries by mean graded utility and a query's
// difficulty is its average percentile across those rankings.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sataudit/logmodel.hpp"
#include "sataudit/metrics.hpp"

namespace sataudit {

// Per group: query -> mean graded utility over that group's impressions.
using GroupQueryMeans = std::vector<std::map<std::string, double>>;

struct DifficultyTable {
  // In [0, 1]; 1 is hardest.
  std::map<std::string, double> difficulty;
  // Per group: query -> difficulty percentile within that group's list.
  std::vector<std::map<std::string, double>> group_percentiles;

  std::optional<double> lookup(const std::string& query) const;
};

// Percentile of each value under descending order: the smallest value maps
// to 1, the largest to 0. Ties share their averaged rank; a single value
// maps to 0.5.
std::vector<double> descending_percentiles(std::span<const double> values);

DifficultyTable estimate_difficulty(const GroupQueryMeans& means);

GroupQueryMeans mean_graded_utility(const LogCorpus& corpus,
                                    std::span<const MetricVector> vectors,
                                    Factor factor);

DifficultyTable estimate_difficulty(const LogCorpus& corpus,
                                    std::span<const MetricVector> vectors,
                                    Factor factor = Factor::Age);

}  // namespace sataudit

#endif  // SATAUDIT_DIFFICULTY_HPP_
