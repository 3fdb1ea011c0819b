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

#include "sataudit/matching.hpp"

#include <algorithm>

#include "sataudit/errors.hpp"

namespace sataudit {

void MatchFilterConfig::validate() const {
  if (min_impressions_per_group < 1) {
    throw UsageError("min_impressions_per_group must be >= 1");
  }
  if (serp_prefix_len < 1) throw UsageError("serp_prefix_len must be >= 1");
  if (!(dwell_threshold_s > 0.0)) {
    throw UsageError("dwell threshold must be positive");
  }
}

std::optional<std::string> final_successful_click(const Impression& imp,
                                                  double dwell_threshold_s) {
  for (const auto& c : imp.clicks) {
    if (c.terminated_query) {
      if (c.dwell_seconds && *c.dwell_seconds > dwell_threshold_s) {
        return c.result_id;
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<std::string> dominant_result(
    std::span<const Impression* const> query_impressions,
    double dwell_threshold_s) {
  std::map<std::string, std::size_t> counts;
  for (const Impression* imp : query_impressions) {
    if (auto r = final_successful_click(*imp, dwell_threshold_s)) ++counts[*r];
  }
  std::optional<std::string> best;
  std::size_t best_count = 0;
  // Map iteration is lexicographic, so strict > keeps the smallest id on ties.
  for (const auto& [r, n] : counts) {
    if (n > best_count) {
      best = r;
      best_count = n;
    }
  }
  return best;
}

std::uint64_t serp_signature(const Impression& imp, int prefix_len) {
  constexpr std::uint64_t kOffset = 14695981039346656037ULL;
  constexpr std::uint64_t kPrime = 1099511628211ULL;
  std::uint64_t h = kOffset;
  auto mix = [&](unsigned char b) {
    h ^= b;
    h *= kPrime;
  };
  const std::size_t n =
      std::min(imp.results.size(), static_cast<std::size_t>(prefix_len));
  for (int shift = 0; shift < 64; shift += 8) {
    mix(static_cast<unsigned char>((n >> shift) & 0xff));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (char c : imp.results[i]) mix(static_cast<unsigned char>(c));
    mix(0x1f);  // unit separator; ids cannot contain it
  }
  return h;
}

bool is_navigational(std::span<const Impression* const> query_impressions,
                     const MatchFilterConfig& cfg) {
  std::size_t labeled = 0, yes = 0;
  for (const Impression* imp : query_impressions) {
    if (imp->navigational) {
      ++labeled;
      if (*imp->navigational) ++yes;
    }
  }
  if (labeled > 0) return 2 * yes > labeled;

  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const Impression* imp : query_impressions) {
    if (auto r = final_successful_click(*imp, cfg.dwell_threshold_s)) {
      ++counts[*r];
      ++total;
    }
  }
  if (total == 0) return false;
  std::size_t top = 0;
  for (const auto& [r, n] : counts) top = std::max(top, n);
  return static_cast<double>(top) >=
         cfg.navigational_concentration * static_cast<double>(total);
}

namespace {

using QueryIndex = std::map<std::string, std::vector<std::size_t>>;

bool every_group_has(const LogCorpus& corpus,
                     const std::vector<std::size_t>& idx, Factor factor,
                     int min_count) {
  std::vector<int> counts(static_cast<std::size_t>(group_count(factor)), 0);
  for (std::size_t i : idx) {
    ++counts[static_cast<std::size_t>(
        group_of(corpus.impressions[i].demographics, factor))];
  }
  return std::all_of(counts.begin(), counts.end(),
                     [&](int c) { return c >= min_count; });
}

std::pair<std::size_t, std::size_t> totals(const QueryIndex& q) {
  std::size_t n = 0;
  for (const auto& [k, v] : q) n += v.size();
  return {n, q.size()};
}

std::vector<const Impression*> pointers(const LogCorpus& corpus,
                                        const std::vector<std::size_t>& idx) {
  std::vector<const Impression*> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(&corpus.impressions[i]);
  return out;
}

}  // namespace

MatchedCohort match_contexts(const LogCorpus& corpus, Factor factor,
                             const MatchFilterConfig& cfg) {
  cfg.validate();
  MatchedCohort cohort;
  cohort.factor = factor;

  QueryIndex stage;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    stage[corpus.impressions[i].query_text].push_back(i);
  }
  auto record = [&](std::size_t Attrition::*field, const QueryIndex& q) {
    auto [n_imp, n_q] = totals(q);
    cohort.impressions_per_stage.*field = n_imp;
    cohort.queries_per_stage.*field = n_q;
  };
  record(&Attrition::input, stage);

  // (1) navigational queries
  if (cfg.require_navigational) {
    std::erase_if(stage, [&](const auto& kv) {
      auto ptrs = pointers(corpus, kv.second);
      return !is_navigational(ptrs, cfg);
    });
  }
  record(&Attrition::after_navigational, stage);

  // (2) enough impressions from every group
  std::erase_if(stage, [&](const auto& kv) {
    return !every_group_has(corpus, kv.second, factor,
                            cfg.min_impressions_per_group);
  });
  record(&Attrition::after_min_impressions, stage);

  // (3) and (4): per-impression predicates against per-query statistics of
  // the stage-2 output.
  QueryIndex after_click, after_serp;
  for (const auto& [query, idx] : stage) {
    auto ptrs = pointers(corpus, idx);
    auto dominant = dominant_result(ptrs, cfg.dwell_threshold_s);
    if (!dominant) continue;

    std::map<std::uint64_t, std::size_t> sig_counts;
    for (const Impression* imp : ptrs) {
      ++sig_counts[serp_signature(*imp, cfg.serp_prefix_len)];
    }
    std::uint64_t modal = 0;
    std::size_t modal_count = 0;
    for (const auto& [sig, n] : sig_counts) {
      if (n > modal_count) {
        modal = sig;
        modal_count = n;
      }
    }

    for (std::size_t i : idx) {
      const Impression& imp = corpus.impressions[i];
      auto fsc = final_successful_click(imp, cfg.dwell_threshold_s);
      if (!fsc || *fsc != *dominant) continue;
      after_click[query].push_back(i);
      if (serp_signature(imp, cfg.serp_prefix_len) == modal) {
        after_serp[query].push_back(i);
      }
    }
  }
  record(&Attrition::after_final_click, after_click);
  record(&Attrition::after_serp, after_serp);

  // (5) re-check group coverage
  std::erase_if(after_serp, [&](const auto& kv) {
    return !every_group_has(corpus, kv.second, factor,
                            cfg.min_impressions_per_group);
  });
  record(&Attrition::after_recheck, after_serp);

  for (const auto& [query, idx] : after_serp) {
    cohort.impressions.insert(cohort.impressions.end(), idx.begin(), idx.end());
  }
  std::sort(cohort.impressions.begin(), cohort.impressions.end());
  cohort.by_query = std::move(after_serp);
  return cohort;
}

NormalizedGroupScores matched_scores(const LogCorpus& corpus,
                                     std::span<const MetricVector> vectors,
                                     const MatchedCohort& cohort) {
  if (cohort.empty()) throw DataError("no matched context: cohort is empty");
  return normalize(
      query_averaged_scores(corpus, vectors, cohort.factor, cohort.impressions));
}

ContextComparison compare_raw_matched(const RawScores& raw,
                                      const RawScores& matched,
                                      double raw_threshold,
                                      double matched_threshold) {
  ContextComparison out;
  out.factor = raw.factor;
  bool any_raw = false, all_matched = true;
  for (MetricKind k : kMetricKinds) {
    std::vector<double> joint;
    for (const auto& g : raw[k]) joint.push_back(g.raw);
    const std::size_t n_raw = joint.size();
    for (const auto& g : matched[k]) joint.push_back(g.raw);
    PanelGap gap;
    gap.metric = k;
    if (joint.size() >= 2 && n_raw >= 1 && joint.size() > n_raw) {
      auto norm = normalize(joint);
      auto spread = [](auto first, auto last) {
        auto [lo, hi] = std::minmax_element(first, last);
        return *hi - *lo;
      };
      gap.raw_gap = spread(norm.values.begin(), norm.values.begin() + n_raw);
      gap.matched_gap = spread(norm.values.begin() + n_raw, norm.values.end());
    }
    gap.diverges =
        gap.raw_gap >= raw_threshold && gap.matched_gap <= matched_threshold;
    any_raw = any_raw || gap.raw_gap >= raw_threshold;
    all_matched = all_matched && gap.matched_gap <= matched_threshold;
    out.panels.push_back(gap);
  }
  out.raw_matched_divergence = any_raw && all_matched;
  return out;
}

}  // namespace sataudit
