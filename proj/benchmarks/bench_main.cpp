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


#include <benchmark/benchmark.h>

#include <random>

#include "sataudit/aggregate.hpp"
#include "sataudit/difficulty.hpp"
#include "sataudit/matching.hpp"
#include "sataudit/metrics.hpp"
#include "sataudit/mlm.hpp"
#include "sataudit/pairwise.hpp"
#include "sataudit/synth.hpp"

namespace sataudit {
namespace {

ScenarioConfig scenario(int users) {
  auto p = preset_params("mixed");
  p.users_per_profile = users;
  return build_scenario(p);
}

void BM_Generate(benchmark::State& state) {
  const auto cfg = scenario(static_cast<int>(state.range(0)));
  std::size_t n = 0;
  for (auto _ : state) {
    auto [corpus, truth] = generate(cfg);
    n = corpus.size();
    benchmark::DoNotOptimize(corpus.impressions.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(n) * state.iterations());
}
BENCHMARK(BM_Generate)->Arg(250)->Arg(2500)->Unit(benchmark::kMillisecond);

struct Fixture {
  LogCorpus corpus;
  std::vector<MetricVector> vectors;
  explicit Fixture(int users) {
    corpus = generate(scenario(users)).first;
    vectors = metric_vectors(corpus);
  }
};

const Fixture& fixture() {
  static const Fixture f(1000);
  return f;
}

void BM_MetricVectors(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(metric_vectors(f.corpus));
  state.SetItemsProcessed(static_cast<std::int64_t>(f.corpus.size()) * state.iterations());
}
BENCHMARK(BM_MetricVectors)->Unit(benchmark::kMillisecond);

void BM_MatchContexts(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(match_contexts(f.corpus, Factor::Age));
}
BENCHMARK(BM_MatchContexts)->Unit(benchmark::kMillisecond);

void BM_MultilevelFit(benchmark::State& state) {
  const auto& f = fixture();
  const auto table = estimate_difficulty(f.corpus, f.vectors);
  const auto metric = static_cast<MetricKind>(state.range(0));
  const auto obs = build_observations(f.corpus, f.vectors, table, metric);
  for (auto _ : state) benchmark::DoNotOptimize(fit_multilevel(obs, family_for(metric)));
  state.SetLabel(std::string(to_string(metric)));
}
BENCHMARK(BM_MultilevelFit)
    ->Arg(static_cast<int>(MetricKind::GU))
    ->Arg(static_cast<int>(MetricKind::Reform))
    ->Arg(static_cast<int>(MetricKind::SCC))
    ->Unit(benchmark::kMillisecond);

void BM_LabelPairs(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> level(0, 3), bit(0, 1), count(0, 5);
  const double gu[4] = {kGuNoClick, kGuUnsuccessful, kGuHighEffort, kGuLowEffort};
  std::vector<MetricVector> v(4096);
  for (auto& m : v) {
    m.graded_utility = gu[level(rng)];
    m.reformulation = bit(rng);
    m.successful_click_count = count(rng);
    m.page_click_count = count(rng);
  }
  for (auto _ : state) {
    int sum = 0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) sum += label_pair_internal(v[i], v[i + 1]);
    benchmark::DoNotOptimize(sum);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(v.size() - 1) * state.iterations());
}
BENCHMARK(BM_LabelPairs);

void BM_PairAudit(benchmark::State& state) {
  const auto& f = fixture();
  PairSampling sampling;
  sampling.query_fraction = 0.1;
  sampling.pairs_per_query = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_pair_audit(f.corpus, f.vectors, LabelMode::Internal, {}, sampling));
  }
}
BENCHMARK(BM_PairAudit)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace sataudit

BENCHMARK_MAIN();
