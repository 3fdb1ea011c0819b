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

#include "sataudit/synth.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "sataudit/errors.hpp"

namespace sataudit {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::int64_t kEpoch = 1454284800;  // 2016-02-01T00:00:00Z

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Distribution code is written out by hand so the stream, and therefore the
// corpus, does not depend on the standard library's implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }
  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  // Index into a cumulative weight table.
  std::size_t pick(const std::vector<double>& cumulative) {
    const double x = uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    return std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

double round_tenth(double x) { return std::max(1.0, std::round(x * 10.0) / 10.0); }

struct Emitter {
  const QuerySpec& query;
  std::vector<std::string> page;
  std::size_t target = 0;  // position (0-based) of the intended result
  double dwell_mult = 1.0;
  Rng& rng;
  std::vector<Click> clicks;
  std::vector<bool> used;

  std::size_t other_position() {
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < page.size(); ++i) {
      if (!used[i] && i != target) free.push_back(i);
    }
    if (free.empty()) return target;
    return free[rng.below(free.size())];
  }

  void click(std::size_t pos, bool long_dwell, bool terminal) {
    used[pos] = true;
    const double dwell = long_dwell
                             ? 90.0 * std::exp(0.4 * rng.normal())
                             : 8.0 * std::exp(0.5 * rng.normal());
    clicks.push_back(Click{page[pos], static_cast<int>(pos) + 1,
                           round_tenth(dwell * dwell_mult), terminal});
  }
  void short_click(bool terminal = false) { click(other_position(), false, terminal); }
  void long_other() { click(other_position(), true, false); }
  void long_target() { click(target, true, true); }
};

constexpr std::array<double, 5> kInformationalTarget = {0.4, 0.25, 0.15, 0.1, 0.1};
constexpr std::array<double, 4> kAgeTilt = {1.5, 0.5, -0.5, -1.5};
constexpr std::array<std::string_view, 8> kTopics = {
    "health", "finance", "travel", "sports", "technology", "shopping", "news", "food"};

}  // namespace

void ScenarioConfig::validate() const {
  if (queries.empty()) throw DataError("scenario has an empty query vocabulary");
  if (users_per_profile <= 0) throw DataError("scenario has zero users");
  if (impressions_per_user_min < 1 ||
      impressions_per_user_max < impressions_per_user_min) {
    throw DataError("impressions_per_user range must satisfy 1 <= min <= max");
  }
  for (const auto& q : queries) {
    if (q.results.empty()) throw DataError("query '" + q.text + "' has no results");
    if (!(q.difficulty >= 0.0 && q.difficulty <= 1.0)) {
      throw DataError("query '" + q.text + "' has difficulty outside [0,1]");
    }
  }
  for (int p = 0; p < kNumProfiles; ++p) {
    const auto& w = query_weights[p];
    if (w.size() != queries.size()) {
      throw DataError("query weight table does not match the vocabulary");
    }
    double sum = 0.0;
    for (double x : w) {
      if (!(x >= 0.0) || !std::isfinite(x)) throw DataError("query weights must be finite and >= 0");
      sum += x;
    }
    if (!(sum > 0.0)) {
      throw DataError("profile " + to_string(DemographicProfile::from_index(p)) +
                      " has no query mass");
    }
    if (!(dwell_multiplier[p] > 0.0) || !std::isfinite(dwell_multiplier[p])) {
      throw DataError("dwell multipliers must be finite and > 0");
    }
    if (!(click_propensity[p] >= 0.0) || !std::isfinite(click_propensity[p])) {
      throw DataError("click propensities must be finite and >= 0");
    }
    if (!std::isfinite(offsets[p])) throw DataError("offsets must be finite");
  }
  if (!(satisfaction_noise >= 0.0) || !(emission_noise >= 0.0) ||
      !(serp_swap_prob >= 0.0 && serp_swap_prob <= 1.0) ||
      !(navigational_target_prob >= 0.0 && navigational_target_prob <= 1.0)) {
    throw DataError("noise levels and probabilities out of range");
  }
}

std::pair<LogCorpus, GroundTruth> generate(const ScenarioConfig& cfg) {
  cfg.validate();
  std::array<std::vector<double>, kNumProfiles> cumulative;
  for (int p = 0; p < kNumProfiles; ++p) {
    cumulative[p].resize(cfg.queries.size());
    std::partial_sum(cfg.query_weights[p].begin(), cfg.query_weights[p].end(),
                     cumulative[p].begin());
  }

  std::vector<Impression> imps;
  GroundTruth truth;
  truth.offsets = cfg.offsets;
  for (const auto& q : cfg.queries) truth.query_difficulty[q.text] = q.difficulty;

  for (int p = 0; p < kNumProfiles; ++p) {
    const auto profile = DemographicProfile::from_index(p);
    for (int u = 0; u < cfg.users_per_profile; ++u) {
      const auto stream = static_cast<std::uint64_t>(p) * 100000000ULL +
                          static_cast<std::uint64_t>(u);
      Rng rng(splitmix64(cfg.seed ^ splitmix64(stream)));
      const std::string user = fmt::format("u{}-{:06d}", p, u);
      const int span = cfg.impressions_per_user_max - cfg.impressions_per_user_min + 1;
      const int n = cfg.impressions_per_user_min + static_cast<int>(rng.below(span));
      std::int64_t ts = kEpoch + static_cast<std::int64_t>(rng.below(28 * 86400));
      int session = 0;

      for (int k = 0; k < n; ++k) {
        if (k > 0) {
          if (rng.bernoulli(0.3)) {
            ++session;
            ts += 3600 + static_cast<std::int64_t>(rng.below(86400));
          } else {
            ts += 30 + static_cast<std::int64_t>(rng.below(270));
          }
        }
        const QuerySpec& q = cfg.queries[rng.pick(cumulative[p])];
        const double s = std::clamp(cfg.base_sat(q.difficulty) + cfg.offsets[p] +
                                        cfg.satisfaction_noise * rng.normal(),
                                    0.0, 1.0);
        const double se = s + cfg.emission_noise * rng.normal();

        Emitter em{q, q.results, 0, cfg.dwell_multiplier[p], rng, {},
                   std::vector<bool>(q.results.size(), false)};
        const std::size_t swappable = std::min<std::size_t>(8, em.page.size());
        if (swappable >= 2 && rng.bernoulli(cfg.serp_swap_prob)) {
          const std::size_t j = rng.below(swappable - 1);
          std::swap(em.page[j], em.page[j + 1]);
        }
        std::size_t canonical = 0;
        const std::size_t top = std::min<std::size_t>(5, q.results.size());
        if (q.navigational) {
          if (top > 1 && !rng.bernoulli(cfg.navigational_target_prob)) {
            canonical = 1 + rng.below(top - 1);
          }
        } else {
          std::vector<double> cum;
          double acc = 0.0;
          for (std::size_t i = 0; i < top; ++i) cum.push_back(acc += kInformationalTarget[i]);
          canonical = rng.pick(cum);
        }
        em.target = static_cast<std::size_t>(
            std::find(em.page.begin(), em.page.end(), q.results[canonical]) -
            em.page.begin());

        const double prop = cfg.click_propensity[p];
        bool reformulated = false;
        auto extra = [&](double p_base) {
          return rng.bernoulli(std::min(1.0, p_base * prop)) ? 1 : 0;
        };
        if (se < 0.1) {
          reformulated = true;
        } else if (se < 0.3) {
          reformulated = true;
          const int shorts = 3 + extra(0.5);
          for (int c = 0; c < shorts; ++c) em.short_click();
        } else if (se < 0.5) {
          const int shorts = 5 + extra(0.5);
          for (int c = 0; c < shorts; ++c) em.short_click(c + 1 == shorts);
        } else if (se < 0.68) {
          const int shorts = 2 + extra(0.5);
          for (int c = 0; c < shorts; ++c) em.short_click();
          em.long_target();
        } else if (se < 0.85) {
          if (rng.bernoulli(0.15)) {
            em.long_other();
          } else if (extra(0.3)) {
            em.short_click();
          }
          em.long_target();
        } else {
          em.long_other();
          em.long_target();
        }

        Impression imp;
        imp.impression_id = fmt::format("imp-{}-{:06d}-{:03d}", p, u, k);
        imp.user_id = user;
        imp.session_id = fmt::format("{}-s{:03d}", user, session);
        imp.timestamp = ts;
        imp.query_text = q.text;
        imp.topic = q.topic;
        imp.results = std::move(em.page);
        imp.clicks = std::move(em.clicks);
        imp.reformulated = reformulated;
        imp.demographics = profile;
        imp.navigational = q.navigational;
        truth.impressions.push_back({imp.impression_id, s, cfg.offsets[p]});
        imps.push_back(std::move(imp));
      }
    }
  }
  std::sort(truth.impressions.begin(), truth.impressions.end(),
            [](const auto& a, const auto& b) { return a.impression_id < b.impression_id; });
  return {make_corpus(std::move(imps)), std::move(truth)};
}

std::vector<std::string> preset_names() {
  return {"null", "query_mix_confound", "dwell_confound", "true_gap", "mixed"};
}

ScenarioParams preset_params(std::string_view name) {
  ScenarioParams p;
  p.preset = std::string(name);
  if (name == "null") {
  } else if (name == "query_mix_confound") {
    p.age_skew = 6.0;
  } else if (name == "dwell_confound") {
    p.age_dwell_multiplier[3] = 1.5;
  } else if (name == "true_gap") {
    p.age_offset[3] = 0.15;
  } else if (name == "mixed") {
    p.age_skew = 3.0;
    p.age_offset[3] = 0.10;
    p.age_dwell_multiplier[3] = 1.3;
    p.age_click_propensity[0] = 1.3;
  } else {
    throw UsageError(fmt::format("unknown scenario preset '{}'", name));
  }
  return p;
}

namespace {

template <std::size_t N>
bool set_indexed(std::array<double, N>& target, std::string_view suffix,
                 std::string_view key, std::string_view value) {
  if constexpr (N == 4) {
    if (auto a = parse_age_group(suffix)) {
      target[static_cast<int>(*a)] = parse_real(key, value);
      return true;
    }
  } else {
    if (auto g = parse_gender(suffix)) {
      target[static_cast<int>(*g)] = parse_real(key, value);
      return true;
    }
  }
  return false;
}

int as_int(std::string_view key, std::string_view value) {
  const auto v = parse_integer(key, value);
  if (v < 0 || v > 100000000) throw UsageError(fmt::format("{}: out of range", key));
  return static_cast<int>(v);
}

}  // namespace

void apply_setting(ScenarioParams& p, std::string_view key, std::string_view value) {
  if (key == "preset") {
    const auto seed = p.seed;
    p = preset_params(value);
    p.seed = seed;
    return;
  }
  if (key == "seed") {
    p.seed = static_cast<std::uint64_t>(parse_integer(key, value));
    return;
  }
  struct IntField { std::string_view name; int ScenarioParams::*field; };
  static constexpr IntField kInts[] = {
      {"users_per_profile", &ScenarioParams::users_per_profile},
      {"impressions_per_user_min", &ScenarioParams::impressions_per_user_min},
      {"impressions_per_user_max", &ScenarioParams::impressions_per_user_max},
      {"n_navigational", &ScenarioParams::n_navigational},
      {"n_informational", &ScenarioParams::n_informational},
      {"n_topics", &ScenarioParams::n_topics},
      {"results_per_page", &ScenarioParams::results_per_page},
  };
  for (const auto& f : kInts) {
    if (key == f.name) {
      p.*f.field = as_int(key, value);
      return;
    }
  }
  struct RealField { std::string_view name; double ScenarioParams::*field; };
  static constexpr RealField kReals[] = {
      {"navigational_traffic", &ScenarioParams::navigational_traffic},
      {"zipf_exponent", &ScenarioParams::zipf_exponent},
      {"age_skew", &ScenarioParams::age_skew},
      {"base_intercept", &ScenarioParams::base_intercept},
      {"base_slope", &ScenarioParams::base_slope},
      {"satisfaction_noise", &ScenarioParams::satisfaction_noise},
      {"emission_noise", &ScenarioParams::emission_noise},
      {"serp_swap_prob", &ScenarioParams::serp_swap_prob},
  };
  for (const auto& f : kReals) {
    if (key == f.name) {
      p.*f.field = parse_real(key, value);
      return;
    }
  }
  const auto dot = key.find('.');
  if (dot != std::string_view::npos) {
    const auto head = key.substr(0, dot), tail = key.substr(dot + 1);
    bool ok = false;
    if (head == "offset") {
      ok = set_indexed(p.age_offset, tail, key, value) ||
           set_indexed(p.gender_offset, tail, key, value);
    } else if (head == "dwell_multiplier") {
      ok = set_indexed(p.age_dwell_multiplier, tail, key, value) ||
           set_indexed(p.gender_dwell_multiplier, tail, key, value);
    } else if (head == "click_propensity") {
      ok = set_indexed(p.age_click_propensity, tail, key, value) ||
           set_indexed(p.gender_click_propensity, tail, key, value);
    }
    if (ok) return;
  }
  throw UsageError(fmt::format("unknown scenario setting '{}'", key));
}

void apply_settings(ScenarioParams& params, const KeyValues& settings) {
  for (const auto& [k, v] : settings) {
    if (k == "preset") apply_setting(params, k, v);
  }
  for (const auto& [k, v] : settings) {
    if (k != "preset") apply_setting(params, k, v);
  }
}

std::string canonical_text(const ScenarioParams& p) {
  std::string out;
  auto put = [&](std::string_view k, auto v) { out += fmt::format("{}={}\n", k, v); };
  put("preset", p.preset);
  put("seed", p.seed);
  put("users_per_profile", p.users_per_profile);
  put("impressions_per_user_min", p.impressions_per_user_min);
  put("impressions_per_user_max", p.impressions_per_user_max);
  put("n_navigational", p.n_navigational);
  put("n_informational", p.n_informational);
  put("n_topics", p.n_topics);
  put("results_per_page", p.results_per_page);
  put("navigational_traffic", p.navigational_traffic);
  put("zipf_exponent", p.zipf_exponent);
  put("age_skew", p.age_skew);
  put("base_intercept", p.base_intercept);
  put("base_slope", p.base_slope);
  put("satisfaction_noise", p.satisfaction_noise);
  put("emission_noise", p.emission_noise);
  put("serp_swap_prob", p.serp_swap_prob);
  for (AgeGroup a : kAgeGroups) {
    const int i = static_cast<int>(a);
    put(fmt::format("offset.{}", to_string(a)), p.age_offset[i]);
    put(fmt::format("dwell_multiplier.{}", to_string(a)), p.age_dwell_multiplier[i]);
    put(fmt::format("click_propensity.{}", to_string(a)), p.age_click_propensity[i]);
  }
  for (Gender g : kGenders) {
    const int i = static_cast<int>(g);
    put(fmt::format("offset.{}", to_string(g)), p.gender_offset[i]);
    put(fmt::format("dwell_multiplier.{}", to_string(g)), p.gender_dwell_multiplier[i]);
    put(fmt::format("click_propensity.{}", to_string(g)), p.gender_click_propensity[i]);
  }
  return out;
}

ScenarioConfig build_scenario(const ScenarioParams& p) {
  if (p.n_navigational + p.n_informational <= 0) {
    throw DataError("scenario has an empty query vocabulary");
  }
  if (p.n_topics < 1) throw UsageError("n_topics must be >= 1");
  if (p.results_per_page < 1) throw UsageError("results_per_page must be >= 1");
  if (!(p.navigational_traffic >= 0.0 && p.navigational_traffic <= 1.0)) {
    throw UsageError("navigational_traffic must lie in [0,1]");
  }

  ScenarioConfig cfg;
  cfg.name = p.preset;
  cfg.seed = p.seed;
  cfg.users_per_profile = p.users_per_profile;
  cfg.impressions_per_user_min = p.impressions_per_user_min;
  cfg.impressions_per_user_max = p.impressions_per_user_max;
  cfg.base_intercept = p.base_intercept;
  cfg.base_slope = p.base_slope;
  cfg.satisfaction_noise = p.satisfaction_noise;
  cfg.emission_noise = p.emission_noise;
  cfg.serp_swap_prob = p.serp_swap_prob;

  Rng rng(splitmix64(p.seed ^ 0x5EEDF00DULL));
  auto topic_name = [&](int t) {
    return t < static_cast<int>(kTopics.size()) ? std::string(kTopics[t])
                                                : fmt::format("topic{}", t);
  };
  const int total = p.n_navigational + p.n_informational;
  for (int i = 0; i < total; ++i) {
    QuerySpec q;
    q.navigational = i < p.n_navigational;
    q.topic = topic_name(i % p.n_topics);
    q.text = q.navigational ? fmt::format("nav{:04d} official site", i)
                            : fmt::format("info{:04d} {} question", i, q.topic);
    const double u = rng.uniform();
    q.difficulty = q.navigational ? 0.3 * u : u;
    for (int r = 1; r <= p.results_per_page; ++r) {
      q.results.push_back(fmt::format("q{:04d}r{:02d}", i, r));
    }
    cfg.queries.push_back(std::move(q));
  }

  for (int pi = 0; pi < kNumProfiles; ++pi) {
    const auto prof = DemographicProfile::from_index(pi);
    const int a = static_cast<int>(prof.age), g = static_cast<int>(prof.gender);
    std::vector<double> w(total, 0.0);
    double nav_sum = 0.0, info_sum = 0.0;
    for (int i = 0; i < total; ++i) {
      const bool nav = i < p.n_navigational;
      const int rank = nav ? i : i - p.n_navigational;
      double x = std::pow(rank + 1.0, -p.zipf_exponent);
      if (!nav) x *= std::exp(p.age_skew * kAgeTilt[a] * (cfg.queries[i].difficulty - 0.5));
      w[i] = x;
      (nav ? nav_sum : info_sum) += x;
    }
    double nav_share = p.navigational_traffic;
    if (p.n_navigational == 0) nav_share = 0.0;
    if (p.n_informational == 0) nav_share = 1.0;
    for (int i = 0; i < total; ++i) {
      const bool nav = i < p.n_navigational;
      w[i] *= nav ? nav_share / nav_sum : (1.0 - nav_share) / info_sum;
    }
    cfg.query_weights[pi] = std::move(w);
    cfg.offsets[pi] = p.age_offset[a] + p.gender_offset[g];
    cfg.dwell_multiplier[pi] = p.age_dwell_multiplier[a] * p.gender_dwell_multiplier[g];
    cfg.click_propensity[pi] = p.age_click_propensity[a] * p.gender_click_propensity[g];
  }
  cfg.validate();
  return cfg;
}

std::map<std::string, ScenarioConfig> scenario_presets() {
  std::map<std::string, ScenarioConfig> out;
  for (const auto& name : preset_names()) out.emplace(name, build_scenario(preset_params(name)));
  return out;
}

std::string ground_truth_csv(const GroundTruth& truth) {
  std::string out = "impression_id,s,group_offset\n";
  for (const auto& t : truth.impressions) {
    out += fmt::format("{},{},{}\n", t.impression_id, t.s, t.group_offset);
  }
  return out;
}

}  // namespace sataudit
