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

#include "sataudit/mlm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"
#include "sataudit/errors.hpp"

namespace sataudit {

ModelFamily family_for(MetricKind metric) {
  switch (metric) {
    case MetricKind::GU: return {Family::GaussianIdentity, metric};
    case MetricKind::Reform: return {Family::BinomialLogit, metric};
    case MetricKind::PCC:
    case MetricKind::SCC: return {Family::PoissonLog, metric};
  }
  return {Family::GaussianIdentity, metric};
}

ObservationSet build_observations(const LogCorpus& corpus,
                                  std::span<const MetricVector> vectors,
                                  const DifficultyTable& difficulty,
                                  MetricKind metric) {
  if (vectors.size() != corpus.size()) {
    throw UsageError("metric vectors do not match corpus size");
  }
  ObservationSet out;
  std::set<std::string> topics;
  for (const auto& imp : corpus.impressions) topics.insert(imp.topic);
  out.topics.assign(topics.begin(), topics.end());
  std::map<std::string_view, int> topic_idx;
  for (std::size_t t = 0; t < out.topics.size(); ++t) {
    topic_idx[out.topics[t]] = static_cast<int>(t);
  }
  out.rows.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& imp = corpus.impressions[i];
    auto x = difficulty.lookup(imp.query_text);
    if (!x) {
      ++out.skipped;
      continue;
    }
    out.rows.push_back({vectors[i].value(metric), imp.demographics.age,
                        imp.demographics.gender, topic_idx.at(imp.topic), *x});
  }
  return out;
}

ObservationSet sample_observations(const ObservationSet& obs,
                                   std::size_t max_rows, std::uint64_t seed) {
  if (obs.rows.size() <= max_rows) return obs;
  std::vector<std::size_t> idx(obs.rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < max_rows; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(max_rows);
  std::sort(idx.begin(), idx.end());
  ObservationSet out;
  out.topics = obs.topics;
  out.skipped = obs.skipped;
  out.rows.reserve(max_rows);
  for (std::size_t i : idx) out.rows.push_back(obs.rows[i]);
  return out;
}

void PriorConfig::validate() const {
  for (double v : {var_age, var_gender, var_topic, var_interaction}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw UsageError("prior variances must be positive and finite");
    }
  }
  if (empirical_bayes_rounds < 0) {
    throw UsageError("empirical_bayes_rounds must be >= 0");
  }
}

std::pair<double, double> SecondLevelEffects::cell(
    AgeGroup age, Gender gender, std::optional<int> topic) const {
  const auto a = static_cast<std::size_t>(age);
  const auto g = static_cast<std::size_t>(gender);
  double alpha = mu0 + alpha_age[a] + alpha_gender[g];
  double beta = mu1 + beta_age[a] + beta_gender[g];
  if (topic) {
    const auto t = static_cast<std::size_t>(*topic);
    const std::size_t n_topics = alpha_topic.size();
    const std::size_t c =
        static_cast<std::size_t>(DemographicProfile{age, gender}.index()) *
            n_topics +
        t;
    alpha += alpha_topic[t] + alpha_interaction[c];
    beta += beta_topic[t] + beta_interaction[c];
  }
  return {alpha, beta};
}

MultilevelFit MultilevelFit::zero(ModelFamily family,
                                  std::vector<std::string> topics) {
  MultilevelFit fit;
  fit.family = family;
  const std::size_t t = topics.size();
  fit.topics = std::move(topics);
  fit.effects.alpha_topic.assign(t, 0.0);
  fit.effects.beta_topic.assign(t, 0.0);
  fit.effects.alpha_interaction.assign(kNumProfiles * t, 0.0);
  fit.effects.beta_interaction.assign(kNumProfiles * t, 0.0);
  return fit;
}

std::optional<int> MultilevelFit::topic_index(std::string_view topic) const {
  auto it = std::lower_bound(topics.begin(), topics.end(), topic);
  if (it == topics.end() || *it != topic) return std::nullopt;
  return static_cast<int>(it - topics.begin());
}

namespace {

// Coefficient layout in the flat parameter vector.
struct Layout {
  int n_topics = 0;
  static constexpr int kMu0 = 0;
  static constexpr int kMu1 = 1;
  static constexpr int kAlphaAge = 2;
  static constexpr int kBetaAge = 6;
  static constexpr int kAlphaGender = 10;
  static constexpr int kBetaGender = 12;
  static constexpr int kAlphaTopic = 14;
  int beta_topic() const { return kAlphaTopic + n_topics; }
  int alpha_cell() const { return kAlphaTopic + 2 * n_topics; }
  int beta_cell() const { return alpha_cell() + kNumProfiles * n_topics; }
  int size() const { return beta_cell() + kNumProfiles * n_topics; }
};

enum class Block { Mean, Age, Gender, Topic, Interaction };

Block block_of(const Layout& l, int j) {
  if (j < Layout::kAlphaAge) return Block::Mean;
  if (j < Layout::kAlphaGender) return Block::Age;
  if (j < Layout::kAlphaTopic) return Block::Gender;
  if (j < l.alpha_cell()) return Block::Topic;
  return Block::Interaction;
}

DesignRow design_row(const Layout& l, const Observation& o) {
  DesignRow r;
  const int a = static_cast<int>(o.age);
  const int g = static_cast<int>(o.gender);
  const int cell = DemographicProfile{o.age, o.gender}.index() * l.n_topics + o.topic;
  r.add(Layout::kMu0, 1.0);
  r.add(Layout::kMu1, o.x);
  r.add(Layout::kAlphaAge + a, 1.0);
  r.add(Layout::kBetaAge + a, o.x);
  r.add(Layout::kAlphaGender + g, 1.0);
  r.add(Layout::kBetaGender + g, o.x);
  r.add(Layout::kAlphaTopic + o.topic, 1.0);
  r.add(l.beta_topic() + o.topic, o.x);
  r.add(l.alpha_cell() + cell, 1.0);
  r.add(l.beta_cell() + cell, o.x);
  r.y = o.y;
  return r;
}

void set_precisions(const Layout& l, const SecondLevelEffects& v,
                    std::vector<double>& prec) {
  prec.assign(static_cast<std::size_t>(l.size()), 0.0);
  for (int j = 0; j < l.size(); ++j) {
    double var = 0.0;
    switch (block_of(l, j)) {
      case Block::Mean: continue;
      case Block::Age: var = v.var_age; break;
      case Block::Gender: var = v.var_gender; break;
      case Block::Topic: var = v.var_topic; break;
      case Block::Interaction: var = v.var_interaction; break;
    }
    prec[static_cast<std::size_t>(j)] = 1.0 / var;
  }
}

void unpack(const Layout& l, std::span<const double> c, SecondLevelEffects& e) {
  auto slice = [&](int from, int n) {
    return std::vector<double>(c.begin() + from, c.begin() + from + n);
  };
  e.mu0 = c[Layout::kMu0];
  e.mu1 = c[Layout::kMu1];
  for (std::size_t a = 0; a < 4; ++a) {
    e.alpha_age[a] = c[Layout::kAlphaAge + a];
    e.beta_age[a] = c[Layout::kBetaAge + a];
  }
  for (std::size_t g = 0; g < 2; ++g) {
    e.alpha_gender[g] = c[Layout::kAlphaGender + g];
    e.beta_gender[g] = c[Layout::kBetaGender + g];
  }
  e.alpha_topic = slice(Layout::kAlphaTopic, l.n_topics);
  e.beta_topic = slice(l.beta_topic(), l.n_topics);
  e.alpha_interaction = slice(l.alpha_cell(), kNumProfiles * l.n_topics);
  e.beta_interaction = slice(l.beta_cell(), kNumProfiles * l.n_topics);
}

// Re-estimates each block's variance as the mean square of its coefficients.
bool update_block_variances(const Layout& l, std::span<const double> c,
                            SecondLevelEffects& e) {
  std::array<double, 5> ss{};
  std::array<int, 5> n{};
  for (int j = 0; j < l.size(); ++j) {
    auto b = static_cast<std::size_t>(block_of(l, j));
    ss[b] += c[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(j)];
    ++n[b];
  }
  constexpr double kFloor = 1e-6;
  auto next = [&](Block b) {
    auto i = static_cast<std::size_t>(b);
    return n[i] ? std::max(kFloor, ss[i] / n[i]) : kFloor;
  };
  std::array<double*, 4> vars = {&e.var_age, &e.var_gender, &e.var_topic,
                                 &e.var_interaction};
  std::array<Block, 4> blocks = {Block::Age, Block::Gender, Block::Topic,
                                 Block::Interaction};
  bool changed = false;
  for (std::size_t i = 0; i < 4; ++i) {
    double v = next(blocks[i]);
    if (std::abs(v - *vars[i]) > 1e-6 * std::max(1.0, *vars[i])) changed = true;
    *vars[i] = v;
  }
  return changed;
}

void check_fittable(const ObservationSet& obs, ModelFamily family) {
  if (obs.rows.empty()) throw DataError("no observations to fit");
  std::set<double> xs;
  for (const auto& o : obs.rows) {
    if (o.topic < 0 || o.topic >= static_cast<int>(obs.topics.size())) {
      throw UsageError("observation topic index out of range");
    }
    if (!std::isfinite(o.y) || !std::isfinite(o.x)) {
      throw DataError("non-finite observation");
    }
    if (family.family == Family::BinomialLogit && (o.y < 0.0 || o.y > 1.0)) {
      throw DataError("binomial outcome outside [0, 1]");
    }
    if (family.family == Family::PoissonLog && o.y < 0.0) {
      throw DataError("poisson outcome is negative");
    }
    xs.insert(o.x);
  }
  // A single cell is fine: the unpenalized means carry it and the priors pin
  // every other block.
  if (xs.size() < 2) throw DataError("need at least two distinct difficulties");
}

}  // namespace

MultilevelFit fit_multilevel(const ObservationSet& obs, ModelFamily family,
                             const PriorConfig& priors,
                             const OptimizerConfig& opt) {
  priors.validate();
  check_fittable(obs, family);

  Layout layout;
  layout.n_topics = static_cast<int>(obs.topics.size());

  // Canonical row order makes the fit independent of input order.
  std::vector<Observation> rows = obs.rows;
  std::sort(rows.begin(), rows.end(), [](const Observation& a, const Observation& b) {
    return std::tie(a.age, a.gender, a.topic, a.x, a.y) <
           std::tie(b.age, b.gender, b.topic, b.x, b.y);
  });

  GlmProblem problem;
  problem.family = family.family;
  problem.n_params = layout.size();
  problem.rows.reserve(rows.size());
  double y_sum = 0.0;
  for (const auto& o : rows) {
    problem.rows.push_back(design_row(layout, o));
    y_sum += o.y;
  }
  const double y_mean = y_sum / static_cast<double>(rows.size());

  MultilevelFit fit = MultilevelFit::zero(family, obs.topics);
  fit.n_observations = rows.size();
  SecondLevelEffects& eff = fit.effects;
  eff.var_age = priors.var_age;
  eff.var_gender = priors.var_gender;
  eff.var_topic = priors.var_topic;
  eff.var_interaction = priors.var_interaction;

  std::vector<double> start(static_cast<std::size_t>(layout.size()), 0.0);
  switch (family.family) {
    case Family::GaussianIdentity:
      start[Layout::kMu0] = y_mean;
      break;
    case Family::BinomialLogit:
      start[Layout::kMu0] = link(family.family, std::clamp(y_mean, 1e-3, 1.0 - 1e-3));
      break;
    case Family::PoissonLog:
      start[Layout::kMu0] = link(family.family, std::max(y_mean, 1e-3));
      break;
  }

  if (family.family == Family::GaussianIdentity) {
    double ss = 0.0;
    for (const auto& o : rows) ss += (o.y - y_mean) * (o.y - y_mean);
    problem.dispersion = std::max(ss / static_cast<double>(rows.size()), 1e-12);
  }

  GlmSolution sol;
  const int eb_rounds = priors.empirical_bayes_rounds;
  for (int round = 0; round <= eb_rounds; ++round) {
    set_precisions(layout, eff, problem.prior_precision);
    // Gaussian: alternate coefficients and residual variance.
    for (int d = 0; d < 50; ++d) {
      sol = fit_penalized_glm(problem, opt, start);
      if (!sol.converged) {
        throw NumericalError(
            "multilevel fit for " + std::string(to_string(family.metric)) +
            " did not converge after " + std::to_string(sol.iterations) +
            " iterations (objective " + std::to_string(sol.objective) +
            ", gradient " + std::to_string(sol.gradient_norm) + ")");
      }
      start = sol.coef;
      if (family.family != Family::GaussianIdentity) break;
      double rss = 0.0;
      for (const auto& r : problem.rows) {
        double e = r.y - r.dot(sol.coef);
        rss += e * e;
      }
      double phi = std::max(rss / static_cast<double>(rows.size()), 1e-12);
      bool settled = std::abs(phi - problem.dispersion) <= 1e-10 * problem.dispersion;
      problem.dispersion = phi;
      if (settled) break;
    }
    fit.convergence.empirical_bayes_rounds = round;
    if (round == eb_rounds || !update_block_variances(layout, sol.coef, eff)) break;
  }

  unpack(layout, sol.coef, eff);
  fit.dispersion = family.family == Family::GaussianIdentity ? problem.dispersion : 1.0;
  fit.convergence.iterations = sol.iterations;
  fit.convergence.objective = sol.objective;
  fit.convergence.gradient_norm = sol.gradient_norm;
  fit.convergence.converged = sol.converged;
  fit.convergence.objective_trace = sol.objective_trace;
  return fit;
}

Prediction predict(const MultilevelFit& fit, AgeGroup age, Gender gender,
                   std::string_view topic, double x) {
  Prediction p;
  auto t = fit.topic_index(topic);
  p.unseen_topic = !t.has_value();
  auto [alpha, beta] = fit.effects.cell(age, gender, t);
  p.value = inverse_link(fit.family.family, alpha + beta * x);
  return p;
}

std::vector<double> difficulty_grid(double step) {
  if (!(step > 0.0) || step > 1.0) throw UsageError("grid step must be in (0, 1]");
  const auto n = static_cast<int>(std::llround(1.0 / step));
  std::vector<double> grid;
  for (int i = 0; i <= n; ++i) {
    grid.push_back(std::min(1.0, static_cast<double>(i) / static_cast<double>(n)));
  }
  return grid;
}

std::vector<GridRow> prediction_grid(const MultilevelFit& fit,
                                     std::span<const std::string> topics,
                                     std::span<const double> grid) {
  std::vector<GridRow> rows;
  for (const auto& topic : topics) {
    for (AgeGroup a : kAgeGroups) {
      for (double x : grid) {
        rows.push_back({topic, a, x, predict(fit, a, Gender::Male, topic, x).value});
      }
    }
  }
  return rows;
}

double max_group_gap(const MultilevelFit& fit, std::span<const double> grid) {
  std::vector<std::optional<int>> topics;
  for (std::size_t t = 0; t < fit.topics.size(); ++t) {
    topics.emplace_back(static_cast<int>(t));
  }
  if (topics.empty()) topics.emplace_back(std::nullopt);
  double gap = 0.0;
  for (const auto& t : topics) {
    for (double x : grid) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (int p = 0; p < kNumProfiles; ++p) {
        auto prof = DemographicProfile::from_index(p);
        auto [alpha, beta] = fit.effects.cell(prof.age, prof.gender, t);
        double v = inverse_link(fit.family.family, alpha + beta * x);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      gap = std::max(gap, hi - lo);
    }
  }
  return gap;
}

std::string fit_to_json(const MultilevelFit& fit) {
  using nlohmann::ordered_json;
  const auto& e = fit.effects;
  ordered_json j;
  j["metric"] = to_string(fit.family.metric);
  j["family"] = to_string(fit.family.family);
  j["topics"] = fit.topics;
  j["n_observations"] = fit.n_observations;
  j["dispersion"] = fit.dispersion;
  ordered_json eff;
  eff["mu0"] = e.mu0;
  eff["mu1"] = e.mu1;
  eff["alpha_age"] = e.alpha_age;
  eff["beta_age"] = e.beta_age;
  eff["alpha_gender"] = e.alpha_gender;
  eff["beta_gender"] = e.beta_gender;
  eff["alpha_topic"] = e.alpha_topic;
  eff["beta_topic"] = e.beta_topic;
  eff["alpha_interaction"] = e.alpha_interaction;
  eff["beta_interaction"] = e.beta_interaction;
  j["effects"] = std::move(eff);
  j["prior_variances"] = {{"age", e.var_age},
                          {"gender", e.var_gender},
                          {"topic", e.var_topic},
                          {"interaction", e.var_interaction}};
  j["convergence"] = {{"iterations", fit.convergence.iterations},
                      {"objective", fit.convergence.objective},
                      {"gradient_norm", fit.convergence.gradient_norm},
                      {"converged", fit.convergence.converged},
                      {"empirical_bayes_rounds",
                       fit.convergence.empirical_bayes_rounds}};
  return j.dump(2);
}

MultilevelFit fit_from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DataError("fit JSON is not an object");
  try {
    auto metric = parse_metric_kind(j.at("metric").get<std::string>());
    if (!metric) throw DataError("fit JSON has an unknown metric");
    MultilevelFit fit = MultilevelFit::zero(family_for(*metric),
                                            j.at("topics").get<std::vector<std::string>>());
    if (j.at("family").get<std::string>() != to_string(fit.family.family)) {
      throw DataError("fit JSON family does not match its metric");
    }
    const auto& ej = j.at("effects");
    auto& e = fit.effects;
    e.mu0 = ej.at("mu0").get<double>();
    e.mu1 = ej.at("mu1").get<double>();
    e.alpha_age = ej.at("alpha_age").get<std::array<double, 4>>();
    e.beta_age = ej.at("beta_age").get<std::array<double, 4>>();
    e.alpha_gender = ej.at("alpha_gender").get<std::array<double, 2>>();
    e.beta_gender = ej.at("beta_gender").get<std::array<double, 2>>();
    e.alpha_topic = ej.at("alpha_topic").get<std::vector<double>>();
    e.beta_topic = ej.at("beta_topic").get<std::vector<double>>();
    e.alpha_interaction = ej.at("alpha_interaction").get<std::vector<double>>();
    e.beta_interaction = ej.at("beta_interaction").get<std::vector<double>>();
    const std::size_t t = fit.topics.size();
    if (e.alpha_topic.size() != t || e.beta_topic.size() != t ||
        e.alpha_interaction.size() != kNumProfiles * t ||
        e.beta_interaction.size() != kNumProfiles * t) {
      throw DataError("fit JSON coefficient sizes do not match its topics");
    }
    const auto& pv = j.at("prior_variances");
    e.var_age = pv.at("age").get<double>();
    e.var_gender = pv.at("gender").get<double>();
    e.var_topic = pv.at("topic").get<double>();
    e.var_interaction = pv.at("interaction").get<double>();
    fit.dispersion = j.at("dispersion").get<double>();
    fit.n_observations = j.at("n_observations").get<std::size_t>();
    const auto& cj = j.at("convergence");
    fit.convergence.iterations = cj.at("iterations").get<int>();
    fit.convergence.objective = cj.at("objective").get<double>();
    fit.convergence.gradient_norm = cj.at("gradient_norm").get<double>();
    fit.convergence.converged = cj.at("converged").get<bool>();
    fit.convergence.empirical_bayes_rounds = cj.at("empirical_bayes_rounds").get<int>();
    return fit;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("malformed fit JSON: ") + ex.what());
  }
}

}  // namespace sataudit
