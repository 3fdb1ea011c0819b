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

#include "sataudit/glm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "sataudit/errors.hpp"

namespace sataudit {

std::string_view to_string(Family family) {
  switch (family) {
    case Family::GaussianIdentity: return "gaussian_identity";
    case Family::BinomialLogit: return "binomial_logit";
    case Family::PoissonLog: return "poisson_log";
  }
  return "?";
}

double inverse_link(Family family, double eta) {
  switch (family) {
    case Family::GaussianIdentity:
      return eta;
    case Family::BinomialLogit:
      // Evaluated on the side where exp() cannot overflow.
      if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
      return 1.0 - 1.0 / (1.0 + std::exp(eta));
    case Family::PoissonLog:
      return std::exp(eta);
  }
  return eta;
}

double link(Family family, double mu) {
  switch (family) {
    case Family::GaussianIdentity: return mu;
    case Family::BinomialLogit: return std::log(mu / (1.0 - mu));
    case Family::PoissonLog: return std::log(mu);
  }
  return mu;
}

double DesignRow::dot(std::span<const double> coef) const {
  double eta = 0.0;
  for (int k = 0; k < nnz; ++k) {
    eta += vals[static_cast<std::size_t>(k)] *
           coef[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])];
  }
  return eta;
}

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double row_loss(Family family, double eta, double y) {
  switch (family) {
    case Family::GaussianIdentity: return 0.5 * (y - eta) * (y - eta);
    case Family::BinomialLogit: return softplus(eta) - y * eta;
    case Family::PoissonLog: return std::exp(eta) - y * eta;
  }
  return 0.0;
}

// d loss / d eta and d^2 loss / d eta^2 for canonical links.
std::pair<double, double> row_derivatives(Family family, double eta, double y) {
  switch (family) {
    case Family::GaussianIdentity:
      return {eta - y, 1.0};
    case Family::BinomialLogit: {
      double mu = inverse_link(family, eta);
      return {mu - y, mu * (1.0 - mu)};
    }
    case Family::PoissonLog: {
      double mu = std::exp(eta);
      return {mu - y, mu};
    }
  }
  return {0.0, 0.0};
}

double likelihood_scale(const GlmProblem& p) {
  return p.family == Family::GaussianIdentity ? 1.0 / p.dispersion : 1.0;
}

void check_problem(const GlmProblem& p) {
  if (p.n_params <= 0) throw UsageError("GLM problem has no parameters");
  if (p.prior_precision.size() != static_cast<std::size_t>(p.n_params)) {
    throw UsageError("prior precision size does not match parameter count");
  }
  if (p.family == Family::GaussianIdentity && !(p.dispersion > 0.0)) {
    throw UsageError("gaussian dispersion must be positive");
  }
  for (const auto& r : p.rows) {
    for (int k = 0; k < r.nnz; ++k) {
      int c = r.cols[static_cast<std::size_t>(k)];
      if (c < 0 || c >= p.n_params) throw UsageError("design column out of range");
    }
  }
}

}  // namespace

double penalized_objective(const GlmProblem& problem,
                           std::span<const double> coef) {
  const double scale = likelihood_scale(problem);
  double loss = 0.0;
  for (const auto& r : problem.rows) {
    loss += r.weight * row_loss(problem.family, r.dot(coef), r.y);
  }
  loss *= scale;
  double penalty = 0.0;
  for (std::size_t j = 0; j < coef.size(); ++j) {
    penalty += problem.prior_precision[j] * coef[j] * coef[j];
  }
  return loss + 0.5 * penalty;
}

std::vector<double> penalized_gradient(const GlmProblem& problem,
                                       std::span<const double> coef) {
  const double scale = likelihood_scale(problem);
  std::vector<double> grad(coef.size(), 0.0);
  for (const auto& r : problem.rows) {
    double d1 = r.weight * scale *
                row_derivatives(problem.family, r.dot(coef), r.y).first;
    for (int k = 0; k < r.nnz; ++k) {
      grad[static_cast<std::size_t>(r.cols[static_cast<std::size_t>(k)])] +=
          d1 * r.vals[static_cast<std::size_t>(k)];
    }
  }
  for (std::size_t j = 0; j < coef.size(); ++j) {
    grad[j] += problem.prior_precision[j] * coef[j];
  }
  return grad;
}

GlmSolution fit_penalized_glm(const GlmProblem& problem,
                              const OptimizerConfig& cfg,
                              std::span<const double> start) {
  check_problem(problem);
  const auto n = static_cast<Eigen::Index>(problem.n_params);
  const double scale = likelihood_scale(problem);

  GlmSolution sol;
  sol.coef.assign(static_cast<std::size_t>(n), 0.0);
  if (!start.empty()) {
    if (start.size() != sol.coef.size()) {
      throw UsageError("start vector size does not match parameter count");
    }
    std::copy(start.begin(), start.end(), sol.coef.begin());
  }

  double f = penalized_objective(problem, sol.coef);
  if (!std::isfinite(f)) throw NumericalError("objective not finite at start");
  sol.objective_trace.push_back(f);

  Eigen::MatrixXd hessian(n, n);
  Eigen::VectorXd grad(n);
  std::vector<double> trial(sol.coef.size());

  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    sol.iterations = iter;
    hessian.setZero();
    grad.setZero();
    for (const auto& r : problem.rows) {
      auto [d1, d2] = row_derivatives(problem.family, r.dot(sol.coef), r.y);
      d1 *= r.weight * scale;
      d2 *= r.weight * scale;
      for (int a = 0; a < r.nnz; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        const Eigen::Index ca = r.cols[ia];
        grad(ca) += d1 * r.vals[ia];
        for (int b = 0; b < r.nnz; ++b) {
          const auto ib = static_cast<std::size_t>(b);
          hessian(ca, r.cols[ib]) += d2 * r.vals[ia] * r.vals[ib];
        }
      }
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double prec = problem.prior_precision[static_cast<std::size_t>(j)];
      grad(j) += prec * sol.coef[static_cast<std::size_t>(j)];
      hessian(j, j) += prec;
    }
    sol.gradient_norm = grad.cwiseAbs().maxCoeff();
    if (!std::isfinite(sol.gradient_norm)) {
      throw NumericalError("gradient not finite");
    }
    if (sol.gradient_norm < cfg.gradient_tolerance) {
      sol.converged = true;
      break;
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    Eigen::VectorXd step = ldlt.solve(-grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite() ||
        step.dot(grad) >= 0.0) {
      // Flat directions (unobserved, unpenalized columns): add a small ridge.
      const double ridge = 1e-8 * std::max(1.0, hessian.diagonal().mean());
      hessian.diagonal().array() += ridge;
      ldlt.compute(hessian);
      step = ldlt.solve(-grad);
      if (!step.allFinite() || step.dot(grad) >= 0.0) step = -grad;
    }

    const double slope = step.dot(grad);  // negative
    double t = 1.0;
    double f_new = f;
    bool accepted = false;
    while (t > 1e-12) {
      for (std::size_t j = 0; j < trial.size(); ++j) {
        trial[j] = sol.coef[j] + t * step(static_cast<Eigen::Index>(j));
      }
      f_new = penalized_objective(problem, trial);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No representable decrease left: converged if the predicted
      // decrease is negligible.
      sol.converged =
          -slope <= cfg.relative_tolerance * std::max(1.0, std::abs(f));
      break;
    }
    sol.coef.swap(trial);
    const double change = std::abs(f - f_new) / std::max(1.0, std::abs(f_new));
    f = f_new;
    sol.objective_trace.push_back(f);
    if (change < cfg.relative_tolerance) {
      sol.gradient_norm = 0.0;
      auto g = penalized_gradient(problem, sol.coef);
      for (double v : g) sol.gradient_norm = std::max(sol.gradient_norm, std::abs(v));
      sol.converged = true;
      break;
    }
  }
  sol.objective = f;
  return sol;
}

}  // namespace sataudit
