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

#include "sataudit/aggregate.hpp"

#include <algorithm>
#include <cmath>

#include "sataudit/errors.hpp"

namespace sataudit {

namespace {

struct QueryAccumulator {
  std::array<double, 4> sum{};
  std::size_t count = 0;
};

double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  double var = ss / static_cast<double>(xs.size() - 1);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

}  // namespace

RawScores query_averaged_scores(const LogCorpus& corpus,
                                std::span<const MetricVector> vectors,
                                Factor factor,
                                std::span<const std::size_t> subset) {
  if (vectors.size() != corpus.size()) {
    throw UsageError("metric vectors do not match corpus size");
  }
  const int n_groups = group_count(factor);
  std::vector<std::map<std::string_view, QueryAccumulator>> per_group(
      static_cast<std::size_t>(n_groups));

  auto add = [&](std::size_t i) {
    const Impression& imp = corpus.impressions[i];
    auto& acc = per_group[static_cast<std::size_t>(
        group_of(imp.demographics, factor))][imp.query_text];
    for (MetricKind k : kMetricKinds) {
      acc.sum[static_cast<std::size_t>(k)] += vectors[i].value(k);
    }
    ++acc.count;
  };
  if (subset.empty()) {
    for (std::size_t i = 0; i < corpus.size(); ++i) add(i);
  } else {
    for (std::size_t i : subset) add(i);
  }

  RawScores out;
  out.factor = factor;
  for (int g = 0; g < n_groups; ++g) {
    const auto& queries = per_group[static_cast<std::size_t>(g)];
    if (queries.empty()) {
      out.warnings.push_back("group " + group_label(factor, g) +
                             " has no queries; excluded");
      continue;
    }
    std::size_t n_imp = 0;
    for (const auto& [q, acc] : queries) n_imp += acc.count;
    for (MetricKind k : kMetricKinds) {
      std::vector<double> query_means;
      query_means.reserve(queries.size());
      for (const auto& [q, acc] : queries) {
        query_means.push_back(acc.sum[static_cast<std::size_t>(k)] /
                              static_cast<double>(acc.count));
      }
      GroupScore s;
      s.group = g;
      s.raw = mean(query_means);
      s.std_error = standard_error(query_means);
      s.n_queries = queries.size();
      s.n_impressions = n_imp;
      out.by_metric[static_cast<std::size_t>(k)].push_back(s);
    }
  }
  return out;
}

RawScores query_averaged_scores(const LogCorpus& corpus, Factor factor,
                                const MetricConfig& cfg) {
  auto vectors = metric_vectors(corpus, cfg);
  return query_averaged_scores(corpus, vectors, factor);
}

NormalizedValues normalize(std::span<const double> raw) {
  if (raw.size() < 2) {
    throw DataError("normalization needs at least two groups");
  }
  NormalizedValues out;
  out.min = *std::min_element(raw.begin(), raw.end());
  out.max = *std::max_element(raw.begin(), raw.end());
  out.values.resize(raw.size(), 0.0);
  if (out.max == out.min) {
    out.degenerate = true;
    return out;
  }
  const double range = out.max - out.min;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == out.min) {
      out.values[i] = 0.0;
    } else if (raw[i] == out.max) {
      out.values[i] = 1.0;
    } else {
      out.values[i] = std::clamp((raw[i] - out.min) / range, 0.0, 1.0);
    }
  }
  return out;
}

NormalizedGroupScores normalize(const RawScores& scores) {
  NormalizedGroupScores out;
  out.factor = scores.factor;
  out.warnings = scores.warnings;
  for (MetricKind k : kMetricKinds) {
    NormalizedPanel panel;
    panel.metric = k;
    panel.groups = scores[k];
    std::vector<double> raw;
    for (const auto& g : panel.groups) raw.push_back(g.raw);
    auto norm = normalize(raw);
    panel.normalized = norm.values;
    panel.degenerate = norm.degenerate;
    const double range = norm.max - norm.min;
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 0; i < panel.groups.size(); ++i) {
      panel.normalized_stderr.push_back(
          norm.degenerate ? 0.0 : panel.groups[i].std_error / range);
      if (raw[i] < raw[lo]) lo = i;
      if (raw[i] > raw[hi]) hi = i;
    }
    panel.raw_gap = range;
    double pooled = std::hypot(panel.groups[lo].std_error,
                               panel.groups[hi].std_error);
    panel.gap_in_stderrs = pooled > 0.0 ? range / pooled : 0.0;
    if (norm.degenerate) {
      out.warnings.push_back(std::string(to_string(k)) +
                             ": all groups equal; degenerate range");
    }
    out.panels.push_back(std::move(panel));
  }
  return out;
}

QueryCounts group_query_counts(const LogCorpus& corpus, Factor factor,
                               int group) {
  QueryCounts counts;
  for (const auto& imp : corpus.impressions) {
    if (group_of(imp.demographics, factor) == group) ++counts[imp.query_text];
  }
  return counts;
}

double smoothed_kl(const QueryCounts& a, const QueryCounts& b, double alpha) {
  if (!(alpha > 0.0)) throw UsageError("smoothing alpha must be positive");
  std::map<std::string_view, std::pair<double, double>> joint;
  double total_a = 0.0, total_b = 0.0;
  for (const auto& [q, c] : a) {
    joint[q].first = static_cast<double>(c);
    total_a += static_cast<double>(c);
  }
  for (const auto& [q, c] : b) {
    joint[q].second = static_cast<double>(c);
    total_b += static_cast<double>(c);
  }
  if (total_a == 0.0 || total_b == 0.0) {
    throw DataError("KL divergence needs two non-empty groups");
  }
  const double v = static_cast<double>(joint.size());
  const double za = total_a + alpha * v;
  const double zb = total_b + alpha * v;
  double kl = 0.0;
  for (const auto& [q, cb] : joint) {
    double p = (cb.first + alpha) / za;
    double r = (cb.second + alpha) / zb;
    kl += p * std::log(p / r);
  }
  // Rounding can leave a tiny negative sum for identical distributions.
  return std::max(kl, 0.0);
}

double query_kl(const LogCorpus& corpus, Factor factor, int group_a,
                int group_b, double smoothing_alpha) {
  return smoothed_kl(group_query_counts(corpus, factor, group_a),
                     group_query_counts(corpus, factor, group_b),
                     smoothing_alpha);
}

std::string_view to_string(QueryClass c) {
  switch (c) {
    case QueryClass::Head: return "head";
    case QueryClass::Torso: return "torso";
    case QueryClass::Tail: return "tail";
  }
  return "?";
}

std::map<std::string, QueryClass> head_tail_classify(const QueryCounts& counts) {
  std::vector<std::pair<std::string, std::size_t>> order(counts.begin(),
                                                         counts.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  const std::size_t n = order.size();
  const std::size_t n_head = (2 * n + 9) / 10;  // ceil(0.2 n)
  const std::size_t n_tail = (3 * n) / 10;      // floor(0.3 n)
  std::map<std::string, QueryClass> out;
  for (std::size_t i = 0; i < n; ++i) {
    QueryClass c = QueryClass::Torso;
    if (i < n_head) {
      c = QueryClass::Head;
    } else if (i >= n - n_tail) {
      c = QueryClass::Tail;
    }
    out.emplace(order[i].first, c);
  }
  return out;
}

std::map<std::string, QueryClass> head_tail_classify(const LogCorpus& corpus) {
  QueryCounts counts;
  for (const auto& imp : corpus.impressions) ++counts[imp.query_text];
  return head_tail_classify(counts);
}

}  // namespace sataudit
