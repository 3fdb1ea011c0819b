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

#include "sataudit/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "sataudit/errors.hpp"

namespace sataudit {

std::string_view to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::GU: return "GU";
    case MetricKind::Reform: return "Reform";
    case MetricKind::PCC: return "PCC";
    case MetricKind::SCC: return "SCC";
  }
  return "?";
}

std::optional<MetricKind> parse_metric_kind(std::string_view text) {
  for (MetricKind k : kMetricKinds) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

Polarity polarity(MetricKind kind) {
  return kind == MetricKind::Reform ? Polarity::LowerBetter
                                    : Polarity::HigherBetter;
}

double MetricVector::value(MetricKind kind) const {
  switch (kind) {
    case MetricKind::GU: return graded_utility;
    case MetricKind::Reform: return reformulation;
    case MetricKind::PCC: return page_click_count;
    case MetricKind::SCC: return successful_click_count;
  }
  return 0.0;
}

int successful_click_count(const Impression& imp, double dwell_threshold_s) {
  int n = 0;
  for (const auto& c : imp.clicks) {
    if (!c.dwell_seconds) {
      throw DataError("impression " + imp.impression_id +
                      " has a click without dwell time (clicks-only log)");
    }
    if (*c.dwell_seconds > dwell_threshold_s) ++n;
  }
  return n;
}

int page_click_count(const Impression& imp) {
  return static_cast<int>(imp.clicks.size());
}

int reformulation(const Impression& imp) {
  if (!imp.reformulated) {
    throw DataError("impression " + imp.impression_id +
                    " has no reformulation flag");
  }
  return *imp.reformulated ? 1 : 0;
}

namespace {

double graded_utility_from(int pcc, int scc, int reform) {
  if (pcc == 0) return kGuNoClick;
  if (scc == 0) return kGuUnsuccessful;
  if (pcc <= 2 && reform == 0) return kGuLowEffort;
  return kGuHighEffort;
}

}  // namespace

double graded_utility(const Impression& imp, double dwell_threshold_s) {
  int pcc = page_click_count(imp);
  if (pcc == 0) return kGuNoClick;
  int scc = successful_click_count(imp, dwell_threshold_s);
  if (scc == 0) return kGuUnsuccessful;
  return graded_utility_from(pcc, scc, reformulation(imp));
}

MetricVector metric_vector(const Impression& imp, const MetricConfig& cfg) {
  MetricVector m;
  m.page_click_count = page_click_count(imp);
  m.successful_click_count = successful_click_count(imp, cfg.dwell_threshold_s);
  m.reformulation = reformulation(imp);
  m.graded_utility = graded_utility_from(
      m.page_click_count, m.successful_click_count, m.reformulation);
  return m;
}

std::vector<MetricVector> metric_vectors(const LogCorpus& corpus,
                                         const MetricConfig& cfg) {
  std::vector<MetricVector> out;
  out.reserve(corpus.size());
  for (const auto& imp : corpus.impressions) {
    out.push_back(metric_vector(imp, cfg));
  }
  return out;
}

MetricVector click_only_vector(const Impression& imp) {
  MetricVector m;
  m.page_click_count = page_click_count(imp);
  return m;
}

double normalized_edit_distance(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 0.0;
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[b.size()]) /
         static_cast<double>(std::max(a.size(), b.size()));
}

namespace {

std::set<std::string> tokens(std::string_view text) {
  std::set<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.insert(tok);
  return out;
}

}  // namespace

double token_overlap(std::string_view original, std::string_view next) {
  auto a = tokens(original);
  if (a.empty()) return 0.0;
  auto b = tokens(next);
  std::size_t shared = 0;
  for (const auto& t : a) shared += b.contains(t) ? 1 : 0;
  return static_cast<double>(shared) / static_cast<double>(a.size());
}

bool is_reformulation(std::string_view original, std::string_view next,
                      const MetricConfig& cfg) {
  std::string a = normalize_query(original);
  std::string b = normalize_query(next);
  if (a == b) return false;
  return token_overlap(a, b) >= cfg.reform_token_overlap ||
         normalized_edit_distance(a, b) <= cfg.reform_edit_distance;
}

std::size_t derive_reformulation_flags(LogCorpus& corpus,
                                       const MetricConfig& cfg) {
  std::map<std::string, std::vector<std::size_t>> sessions;
  for (std::size_t i = 0; i < corpus.impressions.size(); ++i) {
    sessions[corpus.impressions[i].session_id].push_back(i);
  }
  std::size_t filled = 0;
  for (auto& [sid, idx] : sessions) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto& ia = corpus.impressions[a];
      const auto& ib = corpus.impressions[b];
      if (ia.timestamp != ib.timestamp) return ia.timestamp < ib.timestamp;
      return ia.impression_id < ib.impression_id;
    });
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto& imp = corpus.impressions[idx[k]];
      if (imp.reformulated) continue;
      bool reform = k + 1 < idx.size() &&
                    is_reformulation(imp.query_text,
                                     corpus.impressions[idx[k + 1]].query_text,
                                     cfg);
      imp.reformulated = reform;
      ++filled;
    }
  }
  return filled;
}

}  // namespace sataudit
