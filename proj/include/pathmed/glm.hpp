#ifndef PATHMED_GLM_HPP
#define PATHMED_GLM_HPP

#include "pathmed/model.hpp"

namespace pathmed {

struct GlmOptions {
  double ridge = 1e-6;
  int max_iter = 100;
  double tol = 1e-8;
};

struct IrlsReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_path;  // penalized log-likelihood per step
};

// Ridge-penalized least squares on the design implied by `spec`. With
// ridge = 0 the design must have full column rank (error suggests a ridge).
// The penalty covers the whole coefficient vector, intercept included.
FittedModel fit_linear(const ObservedData& data, const std::vector<Index>& rows,
                       const Vector& response, const DesignSpec& spec,
                       double ridge, const Vector& weights = Vector());

// Ridge-penalized Bernoulli likelihood via iteratively reweighted least
// squares with step halving, so the penalized objective never decreases.
// Responses may be fractional in [0,1]. Converged when the max coefficient
// step falls below opts.tol; non-convergence with ridge = 0 raises an error
// suggesting a ridge (separation).
FittedModel fit_logistic(const ObservedData& data, const std::vector<Index>& rows,
                         const Vector& response, const DesignSpec& spec,
                         const GlmOptions& opts = GlmOptions(),
                         const Vector& weights = Vector(),
                         IrlsReport* report = nullptr);

// Exact conditional cell means over integer-coded predictors (optionally
// weighted; zero-weight rows are ignored).
FittedModel fit_saturated(const ObservedData& data, const std::vector<Index>& rows,
                          const Vector& response, const DesignSpec& spec,
                          const Vector& weights = Vector());

double normal_quantile(double p);  // inverse standard normal CDF, |err| < 1e-8
double normal_cdf(double x);

}  // namespace pathmed

#endif
