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

#ifndef SATAUDIT_PAIRWISE_HPP_
#define SATAUDIT_PAIRWISE_HPP_

// Direct estimation of satisfaction differences between groups: sample
// same-query impression pairs from different groups, label the clear cases
// with a high-precision rule cascade, and fit a single-level logit model of
// P(S_i - S_j > 0) on the pair's demographics.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sataudit/glm.hpp"
#include "sataudit/logmodel.hpp"
#include "sataudit/metrics.hpp"
#include "sataudit/mlm.hpp"

namespace sataudit {

struct PairThresholds {
  double gu_strong = 0.4;
  int scc_strong = 2;
  double gu_weak = 0.2;
  int scc_weak = 1;
  int pcc_external = 2;
  double k = 2.5;

  void validate() const;
};

// Internal (full log) cascade, first matching rule wins, all comparisons
// strict: reformulation, then GU beyond gu_strong, then SCC beyond
// scc_strong, then GU beyond gu_weak together with SCC beyond scc_weak.
int label_pair_internal(const MetricVector& mi, const MetricVector& mj,
                        const PairThresholds& th = {});

// Clicks-only rule: PCC difference beyond pcc_external.
int label_pair_external(const MetricVector& mi, const MetricVector& mj,
                        const PairThresholds& th = {});

enum class LabelMode { Internal, External };

struct QueryEligibility {
  Factor factor = Factor::Age;
  int min_groups = 3;
  int min_impressions = 10;
};

// Queries issued by at least `min_groups` groups with at least
// `min_impressions` impressions, sorted.
std::vector<std::string> eligible_queries(const LogCorpus& corpus,
                                          const QueryEligibility& rule = {});

struct ImpressionPair {
  std::size_t i = 0;  // corpus indices, i < j
  std::size_t j = 0;
  friend bool operator==(const ImpressionPair&, const ImpressionPair&) = default;
};

struct PairSampling {
  double query_fraction = 0.10;
  int pairs_per_query = 10000;
  std::uint64_t seed = 0;
  Factor factor = Factor::Age;

  void validate() const;
};

// Samples ceil(fraction * n) of the eligible queries, then per query
// `pairs_per_query` cross-group pairs (without replacement when enough
// exist, otherwise with replacement). Deterministic in the seed.
std::vector<ImpressionPair> sample_pairs(const LogCorpus& corpus,
                                         std::span<const std::string> eligible,
                                         const PairSampling& cfg);

struct LabeledPair {
  DemographicProfile pi;
  DemographicProfile pj;
  int label = 0;
};

// Counts of +1 labels and nonzero labels per ordered profile pair.
struct PairLabelCounts {
  // Indexed [pi.index()][pj.index()].
  std::array<std::array<std::uint64_t, kNumProfiles>, kNumProfiles> wins{};
  std::array<std::array<std::uint64_t, kNumProfiles>, kNumProfiles> nonzero{};
  std::uint64_t positive = 0;
  std::uint64_t negative = 0;
  std::uint64_t zero = 0;

  void add(const LabeledPair& p);
  std::uint64_t total() const { return positive + negative + zero; }
};

struct PairModelConfig {
  double prior_variance = 1.0;
  // Add every pair again with slots swapped and the label negated.
  bool symmetrize = true;
  OptimizerConfig optimizer;
};

struct PairModel {
  double mu0 = 0.0;
  std::array<double, 4> age_i{};
  std::array<double, 4> age_j{};
  std::array<double, 2> gender_i{};
  std::array<double, 2> gender_j{};
  // Indexed [pi.index()][pj.index()].
  std::array<std::array<double, kNumProfiles>, kNumProfiles> interaction{};
  double prior_variance = 1.0;
  bool symmetrized = false;
  Convergence convergence;

  double linear_predictor(const DemographicProfile& pi,
                          const DemographicProfile& pj) const;
};

// Penalized logistic regression of (label == +1) on slot-specific age and
// gender indicators plus the four-way interaction. Zero labels are ignored.
// Throws DataError when no label is nonzero.
PairModel fit_pair_model(const PairLabelCounts& counts,
                         const PairModelConfig& cfg = {});
PairModel fit_pair_model(std::span<const LabeledPair> pairs,
                         const PairModelConfig& cfg = {});

double predict_pair_prob(const PairModel& model, const DemographicProfile& pi,
                         const DemographicProfile& pj);

// P(S_i - S_j > 0) for every age pairing, slot i male and slot j female.
// Indexed [a_i][a_j].
using AgeGrid = std::array<std::array<double, 4>, 4>;
AgeGrid age_pairing_grid(const PairModel& model);

struct ThresholdDerivation {
  PairThresholds thresholds;
  // k * delta before integer rounding; nullopt when the default was kept.
  std::optional<double> scc_strong_raw;
  std::optional<double> pcc_external_raw;
  std::vector<std::string> warnings;
};

struct MetricGaps {
  std::optional<double> gu;
  std::optional<double> scc;
  std::optional<double> pcc;
};

// Strong thresholds are k * delta, weak ones k * delta / 2; counts are
// rounded to integers. Metrics with no gap or a zero gap keep the defaults.
ThresholdDerivation derive_thresholds(const MetricGaps& gaps, double k = 2.5);

// Gaps taken from each fit's max_group_gap over `grid`.
ThresholdDerivation derive_thresholds(const MultilevelFit* gu_fit,
                                      const MultilevelFit* scc_fit,
                                      const MultilevelFit* pcc_fit, double k,
                                      std::span<const double> grid);

struct PairAudit {
  LabelMode mode = LabelMode::Internal;
  PairThresholds thresholds;
  std::size_t eligible_queries = 0;
  std::size_t sampled_queries = 0;
  std::size_t sampled_pairs = 0;
  PairLabelCounts counts;
  PairModel model;
  AgeGrid grid{};
};

// Samples, labels and fits. Internal mode needs full-fidelity metric
// vectors; external mode reads only page click counts.
PairAudit run_pair_audit(const LogCorpus& corpus,
                         std::span<const MetricVector> vectors,
                         LabelMode mode, const PairThresholds& thresholds,
                         const PairSampling& sampling,
                         const QueryEligibility& eligibility = {},
                         const PairModelConfig& model_cfg = {});

std::string pair_audit_to_json(const PairAudit& audit);

}  // namespace sataudit

#endif  // SATAUDIT_PAIRWISE_HPP_
