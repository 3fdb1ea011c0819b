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

#include "sataudit/report.hpp"

#include <fmt/format.h>

#include "json.hpp"

#include "sataudit/errors.hpp"
#include "sataudit/logio.hpp"

namespace sataudit {

std::string_view library_version() { return SATAUDIT_VERSION; }

std::string metadata_line(const RunMetadata& meta) {
  return fmt::format("# sataudit {} seed={} config_hash={}\n", library_version(),
                     meta.seed, meta.config_hash);
}

std::string with_metadata(std::string_view json_object, const RunMetadata& meta) {
  using nlohmann::ordered_json;
  ordered_json in = ordered_json::parse(json_object);
  if (!in.is_object()) throw DataError("report document is not a JSON object");
  ordered_json out;
  out["meta"] = {{"tool", "sataudit"},
                 {"version", library_version()},
                 {"seed", meta.seed},
                 {"config_hash", meta.config_hash}};
  for (auto it = in.begin(); it != in.end(); ++it) {
    if (it.key() != "meta") out[it.key()] = it.value();
  }
  return out.dump(2) + "\n";
}

std::string metrics_csv(const LogCorpus& corpus,
                        std::span<const MetricVector> vectors,
                        const RunMetadata& meta) {
  std::string out = metadata_line(meta);
  out += "impression_id,query_text,age,gender,gu,reform,pcc,scc\n";
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& imp = corpus.impressions[i];
    const auto& v = vectors[i];
    out += fmt::format("{},{},{},{},{},{},{},{}\n", csv_escape(imp.impression_id),
                       csv_escape(imp.query_text), to_string(imp.demographics.age),
                       to_string(imp.demographics.gender), v.graded_utility,
                       v.reformulation, v.page_click_count, v.successful_click_count);
  }
  return out;
}

std::string aggregate_csv(const NormalizedGroupScores& scores,
                          const RunMetadata& meta) {
  std::string out = metadata_line(meta);
  out += "metric,group,raw,normalized,stderr,normalized_stderr,n_queries,n_impressions\n";
  for (const auto& panel : scores.panels) {
    for (std::size_t g = 0; g < panel.groups.size(); ++g) {
      const auto& s = panel.groups[g];
      out += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(panel.metric),
                         group_label(scores.factor, s.group), s.raw,
                         panel.normalized[g], s.std_error, panel.normalized_stderr[g],
                         s.n_queries, s.n_impressions);
    }
  }
  return out;
}

std::string comparison_csv(const ContextComparison& cmp, const RunMetadata& meta) {
  std::string out = metadata_line(meta);
  out += "metric,raw_gap,matched_gap,diverges\n";
  for (const auto& p : cmp.panels) {
    out += fmt::format("{},{},{},{}\n", to_string(p.metric), p.raw_gap, p.matched_gap,
                       p.diverges ? "true" : "false");
  }
  return out;
}

std::string attrition_csv(const MatchedCohort& cohort, const RunMetadata& meta) {
  std::string out = metadata_line(meta);
  out += "stage,impressions,queries\n";
  const auto& i = cohort.impressions_per_stage;
  const auto& q = cohort.queries_per_stage;
  auto row = [&](std::string_view name, std::size_t a, std::size_t b) {
    out += fmt::format("{},{},{}\n", name, a, b);
  };
  row("input", i.input, q.input);
  row("navigational", i.after_navigational, q.after_navigational);
  row("min_impressions", i.after_min_impressions, q.after_min_impressions);
  row("final_click", i.after_final_click, q.after_final_click);
  row("serp", i.after_serp, q.after_serp);
  row("recheck", i.after_recheck, q.after_recheck);
  return out;
}

std::string query_kl_csv(const LogCorpus& corpus, Factor factor,
                         const RunMetadata& meta) {
  std::string out = metadata_line(meta);
  out += "group_a,group_b,kl\n";
  const int n = group_count(factor);
  std::vector<QueryCounts> counts;
  for (int g = 0; g < n; ++g) counts.push_back(group_query_counts(corpus, factor, g));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      out += fmt::format("{},{},{}\n", group_label(factor, a), group_label(factor, b),
                         smoothed_kl(counts[a], counts[b], 0.5));
    }
  }
  return out;
}

std::string query_class_csv(const LogCorpus& corpus, const RunMetadata& meta) {
  QueryCounts counts;
  for (const auto& imp : corpus.impressions) ++counts[imp.query_text];
  const auto classes = head_tail_classify(counts);
  std::string out = metadata_line(meta);
  out += "query_text,impressions,class\n";
  for (const auto& [q, c] : classes) {
    out += fmt::format("{},{},{}\n", csv_escape(q), counts.at(q), to_string(c));
  }
  return out;
}

std::string prediction_grid_csv(const MultilevelFit& fit,
                                std::span<const GridRow> rows,
                                const RunMetadata& meta) {
  std::string out = metadata_line(meta);
  out += "metric,family,topic,age,gender,difficulty,predicted\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},M,{},{}\n", to_string(fit.family.metric),
                       to_string(fit.family.family), csv_escape(r.topic),
                       to_string(r.age), r.x, r.value);
  }
  return out;
}

std::string pair_grid_csv(const AgeGrid& grid, const RunMetadata& meta) {
  std::string out = metadata_line(meta);
  out += "age_i,age_j,probability\n";
  for (AgeGroup a : kAgeGroups) {
    for (AgeGroup b : kAgeGroups) {
      out += fmt::format("{},{},{}\n", to_string(a), to_string(b),
                         grid[static_cast<int>(a)][static_cast<int>(b)]);
    }
  }
  return out;
}

std::string difficulty_csv(const DifficultyTable& table, const RunMetadata& meta) {
  std::string out = metadata_line(meta);
  out += "query_text,difficulty\n";
  for (const auto& [q, d] : table.difficulty) {
    out += fmt::format("{},{}\n", csv_escape(q), d);
  }
  return out;
}

std::vector<std::map<std::string, std::string>> read_report_csv(std::string_view text) {
  std::vector<std::map<std::string, std::string>> rows;
  std::vector<std::string> header;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty() || line.front() == '#') continue;
    auto parsed = split_csv_line(line);
    if (!parsed) throw DataError("malformed report CSV line");
    auto fields = std::move(*parsed);
    if (header.empty()) {
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size()) throw DataError("malformed report CSV row");
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = std::move(fields[i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sataudit
