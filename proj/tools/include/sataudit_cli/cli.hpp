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

#ifndef SATAUDIT_CLI_CLI_HPP_
#define SATAUDIT_CLI_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "sataudit/config.hpp"
#include "sataudit/matching.hpp"
#include "sataudit/metrics.hpp"
#include "sataudit/mlm.hpp"
#include "sataudit/pairwise.hpp"

namespace sataudit::cli {

enum class Method { Raw, Matched, Multilevel, Pairwise, External };

std::string_view to_string(Method m);
std::set<Method> parse_methods(std::string_view list);  // "raw,matched"

struct AuditRunConfig {
  std::string input;
  std::string format;  // empty: from the extension
  Factor factor = Factor::Age;
  std::set<Method> methods = {Method::Raw};
  std::uint64_t seed = 1;
  double k = 2.5;
  bool default_thresholds = false;
  std::string fits_dir;
  std::string out_dir;
  MetricConfig metric;
  MatchFilterConfig match;
  PriorConfig priors;
  std::size_t mlm_max_rows = 0;  // 0: every impression
  double query_fraction = 0.10;
  int pairs_per_query = 10000;
  QueryEligibility eligibility;
  double pair_prior_variance = 1.0;

  // Throws UsageError when a method's dependency is missing.
  void validate() const;
  // Every setting that affects results, one per line; the output directory
  // is left out so relocating a run does not change its hash.
  std::string canonical_text() const;
};

// Applies one `key = value` setting (config file or --set).
void apply_audit_setting(AuditRunConfig& cfg, std::string_view key,
                         std::string_view value);

// Runs the command line. Returns the process exit status: 0 success,
// 1 usage or configuration error, 2 data error, 3 numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace sataudit::cli

#endif  // SATAUDIT_CLI_CLI_HPP_
