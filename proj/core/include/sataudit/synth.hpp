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

#ifndef SATAUDIT_SYNTH_HPP_
#define SATAUDIT_SYNTH_HPP_

// Seeded synthetic log generator with known latent satisfaction.
//
// Each impression draws s = clamp(base_sat(d) + offset[profile] + noise) and
// emits behavior from a monotone ladder over s plus a small emission noise:
//
//   level 0  reformulation; no click at the very bottom, else a few short
//            clicks
//   level 1  five or six short clicks, abandoned
//   level 2  two or three short clicks, then a long terminating click
//   level 3  one long terminating click (sometimes two long clicks)
//   level 4  two long clicks
//
// Dwell times are scaled by the profile's dwell multiplier and the number of
// exploratory short clicks by its click propensity, so both act as pure
// behavioral confounds that leave s untouched.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sataudit/config.hpp"
#include "sataudit/logmodel.hpp"

namespace sataudit {

struct QuerySpec {
  std::string text;
  std::string topic;
  double difficulty = 0.5;  // d in [0, 1]
  bool navigational = false;
  std::vector<std::string> results;  // canonical ranking
};

struct ScenarioConfig {
  std::string name = "custom";
  std::uint64_t seed = 1;
  int users_per_profile = 2500;
  int impressions_per_user_min = 5;
  int impressions_per_user_max = 15;

  std::vector<QuerySpec> queries;
  // Sampling weight of each query, per profile index.
  std::array<std::vector<double>, kNumProfiles> query_weights;

  double base_intercept = 0.9;  // base_sat(d) = intercept + slope * d
  double base_slope = -0.6;
  double satisfaction_noise = 0.2;
  double emission_noise = 0.03;
  double serp_swap_prob = 0.1;
  double navigational_target_prob = 0.9;

  std::array<double, kNumProfiles> offsets{};
  std::array<double, kNumProfiles> dwell_multiplier{1, 1, 1, 1, 1, 1, 1, 1};
  std::array<double, kNumProfiles> click_propensity{1, 1, 1, 1, 1, 1, 1, 1};

  double base_sat(double d) const { return base_intercept + base_slope * d; }
  // Throws DataError on a degenerate configuration.
  void validate() const;
};

struct ImpressionTruth {
  std::string impression_id;
  double s = 0.0;
  double group_offset = 0.0;
};

struct GroundTruth {
  std::vector<ImpressionTruth> impressions;  // sorted by impression_id
  std::array<double, kNumProfiles> offsets{};
  std::map<std::string, double> query_difficulty;
};

std::pair<LogCorpus, GroundTruth> generate(const ScenarioConfig& cfg);

// Compact parameterization used by presets and config files.
struct ScenarioParams {
  std::string preset = "null";
  std::uint64_t seed = 1;
  int users_per_profile = 2500;
  int impressions_per_user_min = 5;
  int impressions_per_user_max = 15;
  int n_navigational = 100;
  int n_informational = 1500;
  int n_topics = 6;
  int results_per_page = 10;
  double navigational_traffic = 0.35;
  double zipf_exponent = 1.0;
  // Strength of the age-dependent difficulty tilt on informational queries.
  double age_skew = 0.0;
  double base_intercept = 0.9;
  double base_slope = -0.6;
  double satisfaction_noise = 0.2;
  double emission_noise = 0.03;
  double serp_swap_prob = 0.1;
  std::array<double, 4> age_offset{};
  std::array<double, 2> gender_offset{};
  std::array<double, 4> age_dwell_multiplier{1, 1, 1, 1};
  std::array<double, 2> gender_dwell_multiplier{1, 1};
  std::array<double, 4> age_click_propensity{1, 1, 1, 1};
  std::array<double, 2> gender_click_propensity{1, 1};
};

std::vector<std::string> preset_names();
// Throws UsageError for an unknown name.
ScenarioParams preset_params(std::string_view name);

// Keys: preset, seed, users_per_profile, offset.G4, offset.F,
// dwell_multiplier.G4, click_propensity.G1, age_skew, ... A `preset` entry
// resets all fields first, wherever it appears.
void apply_settings(ScenarioParams& params, const KeyValues& settings);
void apply_setting(ScenarioParams& params, std::string_view key,
                   std::string_view value);

// Stable textual form of every parameter; hashed into report metadata.
std::string canonical_text(const ScenarioParams& params);

ScenarioConfig build_scenario(const ScenarioParams& params);
std::map<std::string, ScenarioConfig> scenario_presets();

std::string ground_truth_csv(const GroundTruth& truth);

}  // namespace sataudit

#endif  // SATAUDIT_SYNTH_HPP_
