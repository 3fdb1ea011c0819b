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

#ifndef SATAUDIT_MLM_HPP_
#define SATAUDIT_MLM_HPP_

// Two-level generalized linear model of a metric against query difficulty.
//
//   E[Y_i] = f^-1(alpha_{agt} + beta_{agt} * X_i)
//   (alpha, beta)_{agt} = (mu0, mu1) + age + gender + topic + age*gender*topic
//
// Second-level coefficients carry independent zero-mean Gaussian priors with
// one variance per block (age, gender, topic, interaction). Fitting is MAP
// estimation through the penalized-GLM optimizer.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sataudit/difficulty.hpp"
#include "sataudit/glm.hpp"
#include "sataudit/logmodel.hpp"
#include "sataudit/metrics.hpp"

namespace sataudit {

struct ModelFamily {
  Family family = Family::GaussianIdentity;
  MetricKind metric = MetricKind::GU;
};

// GU: gaussian/identity, Reform: binomial/logit, PCC and SCC: poisson/log.
ModelFamily family_for(MetricKind metric);

struct Observation {
  double y = 0.0;
  AgeGroup age = AgeGroup::G1;
  Gender gender = Gender::Male;
  int topic = 0;  // index into ObservationSet::topics
  double x = 0.0;  // query difficulty
};

struct ObservationSet {
  std::vector<std::string> topics;  // sorted
  std::vector<Observation> rows;
  std::size_t skipped = 0;  // impressions whose query had no difficulty
};

ObservationSet build_observations(const LogCorpus& corpus,
                                  std::span<const MetricVector> vectors,
                                  const DifficultyTable& difficulty,
                                  MetricKind metric);

// Uniform sample without replacement of at most `max_rows` rows.
ObservationSet sample_observations(const ObservationSet& obs,
                                   std::size_t max_rows, std::uint64_t seed);

struct PriorConfig {
  double var_age = 1.0;
  double var_gender = 1.0;
  double var_topic = 1.0;
  double var_interaction = 1.0;
  // Rounds of re-estimating each block variance from its coefficients.
  int empirical_bayes_rounds = 0;

  void validate() const;
};

struct SecondLevelEffects {
  double mu0 = 0.0;
  double mu1 = 0.0;
  std::array<double, 4> alpha_age{};
  std::array<double, 4> beta_age{};
  std::array<double, 2> alpha_gender{};
  std::array<double, 2> beta_gender{};
  std::vector<double> alpha_topic;
  std::vector<double> beta_topic;
  // Indexed profile.index() * n_topics + topic.
  std::vector<double> alpha_interaction;
  std::vector<double> beta_interaction;
  double var_age = 1.0;
  double var_gender = 1.0;
  double var_topic = 1.0;
  double var_interaction = 1.0;

  // Cell intercept and slope; an absent topic contributes nothing.
  std::pair<double, double> cell(AgeGroup age, Gender gender,
                                 std::optional<int> topic) const;
};

struct Convergence {
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  int empirical_bayes_rounds = 0;
  std::vector<double> objective_trace;
};

struct MultilevelFit {
  ModelFamily family;
  std::vector<std::string> topics;
  SecondLevelEffects effects;
  double dispersion = 1.0;  // gaussian only
  Convergence convergence;
  std::size_t n_observations = 0;

  // All effects zero for the given topic vocabulary.
  static MultilevelFit zero(ModelFamily family,
                            std::vector<std::string> topics = {});
  std::optional<int> topic_index(std::string_view topic) const;
};

// Needs at least two distinct difficulty values.
// Throws NumericalError when the optimizer does not converge.
MultilevelFit fit_multilevel(const ObservationSet& obs, ModelFamily family,
                             const PriorConfig& priors = {},
                             const OptimizerConfig& opt = {});

struct Prediction {
  double value = 0.0;
  bool unseen_topic = false;
};

Prediction predict(const MultilevelFit& fit, AgeGroup age, Gender gender,
                   std::string_view topic, double x);

// {0, step, 2 step, ..., 1}.
std::vector<double> difficulty_grid(double step = 0.05);

struct GridRow {
  std::string topic;
  AgeGroup age = AgeGroup::G1;
  double x = 0.0;
  double value = 0.0;
};

// One row per (topic, age, difficulty) with gender fixed to male.
std::vector<GridRow> prediction_grid(const MultilevelFit& fit,
                                     std::span<const std::string> topics,
                                     std::span<const double> grid);

// Largest spread, over grid points and topics, of the predicted metric
// across the eight age-gender cells.
double max_group_gap(const MultilevelFit& fit, std::span<const double> grid);

std::string fit_to_json(const MultilevelFit& fit);
MultilevelFit fit_from_json(std::string_view text);

}  // namespace sataudit

#endif  // SATAUDIT_MLM_HPP_
