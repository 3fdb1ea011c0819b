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

#include "sataudit/pairwise.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "sataudit/errors.hpp"

namespace sataudit {

void PairThresholds::validate() const {
  if (!(gu_strong > gu_weak && gu_weak > 0.0)) {
    throw UsageError("thresholds need gu_strong > gu_weak > 0");
  }
  if (!(scc_strong > scc_weak && scc_weak >= 1)) {
    throw UsageError("thresholds need scc_strong > scc_weak >= 1");
  }
  if (pcc_external < 0) throw UsageError("pcc_external must be >= 0");
  if (!(k > 1.0)) throw UsageError("k must be greater than 1");
}

int label_pair_internal(const MetricVector& mi, const MetricVector& mj,
                        const PairThresholds& th) {
  if (mi.reformulation < mj.reformulation) return +1;
  if (mi.reformulation > mj.reformulation) return -1;
  const double gu_ij = mi.graded_utility - mj.graded_utility;
  const double gu_ji = mj.graded_utility - mi.graded_utility;
  if (gu_ij > th.gu_strong) return +1;
  if (gu_ji > th.gu_strong) return -1;
  const int scc_ij = mi.successful_click_count - mj.successful_click_count;
  const int scc_ji = -scc_ij;
  if (scc_ij > th.scc_strong) return +1;
  if (scc_ji > th.scc_strong) return -1;
  if (gu_ij > th.gu_weak && scc_ij > th.scc_weak) return +1;
  if (gu_ji > th.gu_weak && scc_ji > th.scc_weak) return -1;
  return 0;
}

int label_pair_external(const MetricVector& mi, const MetricVector& mj,
                        const PairThresholds& th) {
  const int d = mi.page_click_count - mj.page_click_count;
  if (d > th.pcc_external) return +1;
  if (-d > th.pcc_external) return -1;
  return 0;
}

std::vector<std::string> eligible_queries(const LogCorpus& corpus,
                                          const QueryEligibility& rule) {
  struct Tally {
    std::size_t impressions = 0;
    unsigned groups = 0;  // bitmask
  };
  std::map<std::string_view, Tally> tally;
  for (const auto& imp : corpus.impressions) {
    auto& t = tally[imp.query_text];
    ++t.impressions;
    t.groups |= 1u << group_of(imp.demographics, rule.factor);
  }
  std::vector<std::string> out;
  for (const auto& [q, t] : tally) {
    if (std::popcount(t.groups) >= rule.min_groups &&
        t.impressions >= static_cast<std::size_t>(rule.min_impressions)) {
      out.emplace_back(q);
    }
  }
  return out;
}

void PairSampling::validate() const {
  if (!(query_fraction > 0.0 && query_fraction <= 1.0)) {
    throw UsageError("query_fraction must be in (0, 1]");
  }
  if (pairs_per_query < 1) throw UsageError("pairs_per_query must be >= 1");
}

namespace {

void sample_query_pairs(const LogCorpus& corpus,
                        const std::vector<std::size_t>& idx, Factor factor,
                        int pairs_per_query, std::mt19937_64& rng,
                        std::vector<ImpressionPair>& out) {
  const std::size_t n = idx.size();
  std::vector<int> group(n);
  std::map<int, std::uint64_t> sizes;
  for (std::size_t k = 0; k < n; ++k) {
    group[k] = group_of(corpus.impressions[idx[k]].demographics, factor);
    ++sizes[group[k]];
  }
  std::uint64_t same = 0;
  for (const auto& [g, s] : sizes) same += s * (s - 1) / 2;
  const std::uint64_t cross = static_cast<std::uint64_t>(n) * (n - 1) / 2 - same;
  if (cross == 0) return;
  const auto want = static_cast<std::uint64_t>(pairs_per_query);

  auto enumerate = [&] {
    std::vector<ImpressionPair> all;
    all.reserve(cross);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        if (group[a] != group[b]) all.push_back({idx[a], idx[b]});
      }
    }
    return all;
  };

  if (cross < want) {
    // With replacement.
    auto all = enumerate();
    std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
    for (std::uint64_t r = 0; r < want; ++r) out.push_back(all[pick(rng)]);
    return;
  }
  if (2 * want > cross) {
    // Dense: partial shuffle of the full list.
    auto all = enumerate();
    for (std::size_t r = 0; r < want; ++r) {
      std::uniform_int_distribution<std::size_t> pick(r, all.size() - 1);
      std::swap(all[r], all[pick(rng)]);
      out.push_back(all[r]);
    }
    return;
  }
  // Sparse: rejection sampling of distinct cross-group pairs.
  std::unordered_set<std::uint64_t> seen;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  while (seen.size() < want) {
    std::size_t a = pick(rng), b = pick(rng);
    if (a == b || group[a] == group[b]) continue;
    if (a > b) std::swap(a, b);
    if (!seen.insert(static_cast<std::uint64_t>(a) * n + b).second) continue;
    out.push_back({idx[a], idx[b]});
  }
}

}  // namespace

std::vector<ImpressionPair> sample_pairs(const LogCorpus& corpus,
                                         std::span<const std::string> eligible,
                                         const PairSampling& cfg) {
  cfg.validate();
  std::vector<std::string> queries(eligible.begin(), eligible.end());
  std::sort(queries.begin(), queries.end());
  std::mt19937_64 rng(cfg.seed);

  const auto n_take = static_cast<std::size_t>(std::ceil(
      cfg.query_fraction * static_cast<double>(queries.size()) - 1e-9));
  for (std::size_t r = 0; r < n_take && r < queries.size(); ++r) {
    std::uniform_int_distribution<std::size_t> pick(r, queries.size() - 1);
    std::swap(queries[r], queries[pick(rng)]);
  }
  queries.resize(std::min(n_take, queries.size()));
  std::sort(queries.begin(), queries.end());

  std::map<std::string_view, std::vector<std::size_t>> by_query;
  for (const auto& q : queries) by_query[q];
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto it = by_query.find(corpus.impressions[i].query_text);
    if (it != by_query.end()) it->second.push_back(i);
  }
  std::vector<ImpressionPair> pairs;
  for (const auto& [q, idx] : by_query) {
    sample_query_pairs(corpus, idx, cfg.factor, cfg.pairs_per_query, rng, pairs);
  }
  return pairs;
}

void PairLabelCounts::add(const LabeledPair& p) {
  if (p.label == 0) {
    ++zero;
    return;
  }
  const auto a = static_cast<std::size_t>(p.pi.index());
  const auto b = static_cast<std::size_t>(p.pj.index());
  ++nonzero[a][b];
  if (p.label > 0) {
    ++wins[a][b];
    ++positive;
  } else {
    ++negative;
  }
}

namespace {

constexpr int kMu0 = 0;
constexpr int kAgeI = 1;
constexpr int kAgeJ = 5;
constexpr int kGenderI = 9;
constexpr int kGenderJ = 11;
constexpr int kInteraction = 13;
constexpr int kPairParams = kInteraction + kNumProfiles * kNumProfiles;

// Exact antisymmetrization: the optimum of a symmetrized fit already has
// this form; projecting removes solver round-off.
void antisymmetrize(PairModel& m) {
  m.mu0 = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    double u = 0.5 * (m.age_i[a] - m.age_j[a]);
    m.age_i[a] = u;
    m.age_j[a] = -u;
  }
  for (std::size_t g = 0; g < 2; ++g) {
    double u = 0.5 * (m.gender_i[g] - m.gender_j[g]);
    m.gender_i[g] = u;
    m.gender_j[g] = -u;
  }
  for (std::size_t p = 0; p < kNumProfiles; ++p) {
    m.interaction[p][p] = 0.0;
    for (std::size_t q = p + 1; q < kNumProfiles; ++q) {
      double u = 0.5 * (m.interaction[p][q] - m.interaction[q][p]);
      m.interaction[p][q] = u;
      m.interaction[q][p] = -u;
    }
  }
}

}  // namespace

double PairModel::linear_predictor(const DemographicProfile& pi,
                                   const DemographicProfile& pj) const {
  const auto ai = static_cast<std::size_t>(pi.age);
  const auto aj = static_cast<std::size_t>(pj.age);
  const auto gi = static_cast<std::size_t>(pi.gender);
  const auto gj = static_cast<std::size_t>(pj.gender);
  // Grouped so that swapping slots of an antisymmetric model negates every
  // partial sum exactly.
  const double age = age_i[ai] + age_j[aj];
  const double gender = gender_i[gi] + gender_j[gj];
  const double inter = interaction[static_cast<std::size_t>(pi.index())]
                                  [static_cast<std::size_t>(pj.index())];
  return mu0 + ((age + gender) + inter);
}

PairModel fit_pair_model(const PairLabelCounts& counts,
                         const PairModelConfig& cfg) {
  if (!(cfg.prior_variance > 0.0)) {
    throw UsageError("pair model prior variance must be positive");
  }
  if (counts.positive + counts.negative == 0) {
    throw DataError("insufficient signal: every sampled pair was labeled 0");
  }
  GlmProblem problem;
  problem.family = Family::BinomialLogit;
  problem.n_params = kPairParams;
  problem.prior_precision.assign(kPairParams, 1.0 / cfg.prior_variance);

  for (int p = 0; p < kNumProfiles; ++p) {
    for (int q = 0; q < kNumProfiles; ++q) {
      const auto up = static_cast<std::size_t>(p);
      const auto uq = static_cast<std::size_t>(q);
      double wins = static_cast<double>(counts.wins[up][uq]);
      double n = static_cast<double>(counts.nonzero[up][uq]);
      if (cfg.symmetrize) {
        // Swapped copies of (q, p) pairs with negated labels.
        wins += static_cast<double>(counts.nonzero[uq][up] - counts.wins[uq][up]);
        n += static_cast<double>(counts.nonzero[uq][up]);
      }
      if (n == 0.0) continue;
      auto pi = DemographicProfile::from_index(p);
      auto pj = DemographicProfile::from_index(q);
      DesignRow r;
      r.add(kMu0, 1.0);
      r.add(kAgeI + static_cast<int>(pi.age), 1.0);
      r.add(kAgeJ + static_cast<int>(pj.age), 1.0);
      r.add(kGenderI + static_cast<int>(pi.gender), 1.0);
      r.add(kGenderJ + static_cast<int>(pj.gender), 1.0);
      r.add(kInteraction + p * kNumProfiles + q, 1.0);
      r.y = wins / n;
      r.weight = n;
      problem.rows.push_back(r);
    }
  }

  GlmSolution sol = fit_penalized_glm(problem, cfg.optimizer);
  if (!sol.converged) {
    throw NumericalError("pair model did not converge after " +
                         std::to_string(sol.iterations) + " iterations");
  }
  PairModel m;
  const auto& c = sol.coef;
  m.mu0 = c[kMu0];
  for (std::size_t a = 0; a < 4; ++a) {
    m.age_i[a] = c[kAgeI + a];
    m.age_j[a] = c[kAgeJ + a];
  }
  for (std::size_t g = 0; g < 2; ++g) {
    m.gender_i[g] = c[kGenderI + g];
    m.gender_j[g] = c[kGenderJ + g];
  }
  for (std::size_t p = 0; p < kNumProfiles; ++p) {
    for (std::size_t q = 0; q < kNumProfiles; ++q) {
      m.interaction[p][q] = c[kInteraction + p * kNumProfiles + q];
    }
  }
  m.prior_variance = cfg.prior_variance;
  m.symmetrized = cfg.symmetrize;
  if (cfg.symmetrize) antisymmetrize(m);
  m.convergence.iterations = sol.iterations;
  m.convergence.objective = sol.objective;
  m.convergence.gradient_norm = sol.gradient_norm;
  m.convergence.converged = sol.converged;
  m.convergence.objective_trace = sol.objective_trace;
  return m;
}

PairModel fit_pair_model(std::span<const LabeledPair> pairs,
                         const PairModelConfig& cfg) {
  PairLabelCounts counts;
  for (const auto& p : pairs) counts.add(p);
  return fit_pair_model(counts, cfg);
}

double predict_pair_prob(const PairModel& model, const DemographicProfile& pi,
                         const DemographicProfile& pj) {
  return inverse_link(Family::BinomialLogit, model.linear_predictor(pi, pj));
}

AgeGrid age_pairing_grid(const PairModel& model) {
  AgeGrid grid{};
  for (AgeGroup ai : kAgeGroups) {
    for (AgeGroup aj : kAgeGroups) {
      grid[static_cast<std::size_t>(ai)][static_cast<std::size_t>(aj)] =
          predict_pair_prob(model, {ai, Gender::Male}, {aj, Gender::Female});
    }
  }
  return grid;
}

ThresholdDerivation derive_thresholds(const MetricGaps& gaps, double k) {
  if (!(k > 1.0)) throw UsageError("k must be greater than 1");
  ThresholdDerivation out;
  out.thresholds.k = k;
  auto usable = [&](const std::optional<double>& d, const char* name) {
    if (!d) {
      out.warnings.push_back(std::string(name) + ": no fit; default thresholds kept");
      return false;
    }
    if (!(*d > 0.0)) {
      out.warnings.push_back(std::string(name) +
                             ": zero group gap (degenerate null fit); default thresholds kept");
      return false;
    }
    return true;
  };
  if (usable(gaps.gu, "GU")) {
    out.thresholds.gu_strong = k * *gaps.gu;
    out.thresholds.gu_weak = k * *gaps.gu / 2.0;
  }
  if (usable(gaps.scc, "SCC")) {
    const double strong = k * *gaps.scc;
    const int weak = std::max(1, static_cast<int>(std::lround(strong / 2.0)));
    out.thresholds.scc_weak = weak;
    out.thresholds.scc_strong = std::max(weak + 1, static_cast<int>(std::lround(strong)));
    out.scc_strong_raw = strong;
  }
  if (usable(gaps.pcc, "PCC")) {
    const double strong = k * *gaps.pcc;
    out.thresholds.pcc_external = std::max(1, static_cast<int>(std::lround(strong)));
    out.pcc_external_raw = strong;
  }
  return out;
}

ThresholdDerivation derive_thresholds(const MultilevelFit* gu_fit,
                                      const MultilevelFit* scc_fit,
                                      const MultilevelFit* pcc_fit, double k,
                                      std::span<const double> grid) {
  MetricGaps gaps;
  if (gu_fit) gaps.gu = max_group_gap(*gu_fit, grid);
  if (scc_fit) gaps.scc = max_group_gap(*scc_fit, grid);
  if (pcc_fit) gaps.pcc = max_group_gap(*pcc_fit, grid);
  return derive_thresholds(gaps, k);
}

PairAudit run_pair_audit(const LogCorpus& corpus,
                         std::span<const MetricVector> vectors, LabelMode mode,
                         const PairThresholds& thresholds,
                         const PairSampling& sampling,
                         const QueryEligibility& eligibility,
                         const PairModelConfig& model_cfg) {
  thresholds.validate();
  if (mode == LabelMode::Internal) {
    if (corpus.source == LogSource::External) {
      throw DataError(
          "internal labeling needs dwell times and reformulation flags; "
          "this is a clicks-only log (use the external method)");
    }
    if (vectors.size() != corpus.size()) {
      throw UsageError("metric vectors do not match corpus size");
    }
  }
  PairAudit audit;
  audit.mode = mode;
  audit.thresholds = thresholds;
  auto eligible = eligible_queries(corpus, eligibility);
  audit.eligible_queries = eligible.size();
  auto pairs = sample_pairs(corpus, eligible, sampling);
  audit.sampled_pairs = pairs.size();
  std::set<std::string_view> sampled;
  for (const auto& p : pairs) {
    sampled.insert(corpus.impressions[p.i].query_text);
    const auto& a = corpus.impressions[p.i];
    const auto& b = corpus.impressions[p.j];
    int label = mode == LabelMode::Internal
                    ? label_pair_internal(vectors[p.i], vectors[p.j], thresholds)
                    : label_pair_external(click_only_vector(a),
                                          click_only_vector(b), thresholds);
    audit.counts.add({a.demographics, b.demographics, label});
  }
  audit.sampled_queries = sampled.size();
  audit.model = fit_pair_model(audit.counts, model_cfg);
  audit.grid = age_pairing_grid(audit.model);
  return audit;
}

std::string pair_audit_to_json(const PairAudit& audit) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["mode"] = audit.mode == LabelMode::Internal ? "internal" : "external";
  const auto& th = audit.thresholds;
  j["k"] = th.k;
  j["thresholds"] = {{"gu_strong", th.gu_strong},
                     {"scc_strong", th.scc_strong},
                     {"gu_weak", th.gu_weak},
                     {"scc_weak", th.scc_weak},
                     {"pcc_external", th.pcc_external}};
  j["eligible_queries"] = audit.eligible_queries;
  j["sampled_queries"] = audit.sampled_queries;
  j["sampled_pairs"] = audit.sampled_pairs;
  j["labels"] = {{"positive", audit.counts.positive},
                 {"negative", audit.counts.negative},
                 {"zero", audit.counts.zero}};
  ordered_json grid = ordered_json::array();
  for (AgeGroup ai : kAgeGroups) {
    for (AgeGroup aj : kAgeGroups) {
      grid.push_back({{"age_i", to_string(ai)},
                      {"gender_i", "M"},
                      {"age_j", to_string(aj)},
                      {"gender_j", "F"},
                      {"p", audit.grid[static_cast<std::size_t>(ai)]
                                      [static_cast<std::size_t>(aj)]}});
    }
  }
  j["age_pairing_grid"] = std::move(grid);
  const auto& m = audit.model;
  j["model"] = {{"mu0", m.mu0},
                {"age_i", m.age_i},
                {"age_j", m.age_j},
                {"gender_i", m.gender_i},
                {"gender_j", m.gender_j},
                {"interaction", m.interaction},
                {"prior_variance", m.prior_variance},
                {"symmetrized", m.symmetrized},
                {"iterations", m.convergence.iterations},
                {"converged", m.convergence.converged}};
  return j.dump(2);
}

}  // namespace sataudit
