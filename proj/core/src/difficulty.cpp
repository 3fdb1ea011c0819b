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

#include "sataudit/difficulty.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "sataudit/errors.hpp"

namespace sataudit {

std::optional<double> DifficultyTable::lookup(const std::string& query) const {
  auto it = difficulty.find(query);
  if (it == difficulty.end()) return std::nullopt;
  return it->second;
}

std::vector<double> descending_percentiles(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<double> out(n, 0.5);
  if (n < 2) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] > values[b];
  });
  const double denom = static_cast<double>(n - 1);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // 0-based ranks i..j share their mean.
    const double rank = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) out[order[k]] = rank / denom;
    i = j + 1;
  }
  return out;
}

DifficultyTable estimate_difficulty(const GroupQueryMeans& means) {
  DifficultyTable table;
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& group : means) {
    std::vector<double> values;
    values.reserve(group.size());
    for (const auto& [q, gu] : group) values.push_back(gu);
    auto pct = descending_percentiles(values);
    std::map<std::string, double> group_pct;
    std::size_t k = 0;
    for (const auto& [q, gu] : group) {
      group_pct.emplace(q, pct[k]);
      auto& a = acc[q];
      a.first += pct[k];
      a.second += 1;
      ++k;
    }
    table.group_percentiles.push_back(std::move(group_pct));
  }
  for (const auto& [q, a] : acc) {
    table.difficulty.emplace(q, a.first / static_cast<double>(a.second));
  }
  return table;
}

GroupQueryMeans mean_graded_utility(const LogCorpus& corpus,
                                    std::span<const MetricVector> vectors,
                                    Factor factor) {
  if (vectors.size() != corpus.size()) {
    throw UsageError("metric vectors do not match corpus size");
  }
  // GU lives on the thirds grid, so sums are kept as integer thirds: equal
  // means then come out as identical doubles whatever the summation order,
  // which keeps the rank statistics below free of rounding ties.
  struct Sum {
    std::int64_t thirds = 0;
    double off_grid = 0.0;
    bool exact = true;
    std::size_t n = 0;
  };
  const auto n_groups = static_cast<std::size_t>(group_count(factor));
  std::vector<std::map<std::string, Sum>> sums(n_groups);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& imp = corpus.impressions[i];
    auto& s = sums[static_cast<std::size_t>(
        group_of(imp.demographics, factor))][imp.query_text];
    const double gu = vectors[i].graded_utility;
    const double t = std::round(3.0 * gu);
    if (std::abs(3.0 * gu - t) > 1e-9) s.exact = false;
    s.thirds += static_cast<std::int64_t>(t);
    s.off_grid += gu;
    s.n += 1;
  }
  GroupQueryMeans out(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    for (const auto& [q, s] : sums[g]) {
      const double n = static_cast<double>(s.n);
      out[g].emplace(q, s.exact ? static_cast<double>(s.thirds) / (3.0 * n)
                                : s.off_grid / n);
    }
  }
  return out;
}

DifficultyTable estimate_difficulty(const LogCorpus& corpus,
                                    std::span<const MetricVector> vectors,
                                    Factor factor) {
  return estimate_difficulty(mean_graded_utility(corpus, vectors, factor));
}

}  // namespace sataudit
