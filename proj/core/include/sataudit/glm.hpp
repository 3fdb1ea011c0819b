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

#ifndef SATAUDIT_GLM_HPP_
#define SATAUDIT_GLM_HPP_

// Penalized maximum likelihood for canonical-link GLMs with sparse rows and
// independent Gaussian priors. Newton steps with backtracking line search;
// shared by the multilevel metric model and the pair model.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace sataudit {

enum class Family : std::uint8_t { GaussianIdentity, BinomialLogit, PoissonLog };

std::string_view to_string(Family family);
double inverse_link(Family family, double eta);
double link(Family family, double mu);

struct DesignRow {
  static constexpr int kMaxTerms = 12;
  std::array<int, kMaxTerms> cols{};
  std::array<double, kMaxTerms> vals{};
  int nnz = 0;
  double y = 0.0;       // binomial: success proportion
  double weight = 1.0;  // binomial: trial count

  void add(int col, double val) {
    cols[static_cast<std::size_t>(nnz)] = col;
    vals[static_cast<std::size_t>(nnz)] = val;
    ++nnz;
  }
  double dot(std::span<const double> coef) const;
};

struct GlmProblem {
  Family family = Family::GaussianIdentity;
  int n_params = 0;
  std::vector<DesignRow> rows;
  // 1 / prior variance per coefficient; 0 leaves it unpenalized.
  std::vector<double> prior_precision;
  // Gaussian residual variance; ignored by the other families.
  double dispersion = 1.0;
};

struct OptimizerConfig {
  int max_iterations = 500;
  double relative_tolerance = 1e-8;  // on the objective
  double gradient_tolerance = 1e-6;  // max-norm
};

struct GlmSolution {
  std::vector<double> coef;
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  // Objective after each accepted iterate, starting with the initial point.
  std::vector<double> objective_trace;
};

// Negative log-likelihood (up to constants) plus the Gaussian log-prior
// penalty.
double penalized_objective(const GlmProblem& problem,
                           std::span<const double> coef);
std::vector<double> penalized_gradient(const GlmProblem& problem,
                                       std::span<const double> coef);

// Minimizes penalized_objective. `start` defaults to zeros. A non-converged
// result is returned, not thrown; callers decide.
GlmSolution fit_penalized_glm(const GlmProblem& problem,
                              const OptimizerConfig& cfg = {},
                              std::span<const double> start = {});

}  // namespace sataudit

#endif  // SATAUDIT_GLM_HPP_
