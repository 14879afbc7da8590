#ifndef PATHMED_INFERENCE_HPP
#define PATHMED_INFERENCE_HPP

#include <functional>

#include "pathmed/data.hpp"

namespace pathmed {

// Plug-in variance of an estimator from its centered per-unit contribution
// values: second moment divided by n. Not robust to nuisance
// misspecification; the bootstrap is the fallback for parametric fits.
double eif_variance(const Vector& phi);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

Interval wald_ci(double point, double variance, double level);

struct BootstrapResult {
  double se = 0.0;
  Interval ci;
  Vector replicates;
  std::vector<Warning> warnings;
};

// Nonparametric bootstrap over units. Replicates that draw an empty
// treatment arm are redrawn (up to 10 attempts each). Deterministic given
// the seed, for any thread count. `adaptive_learners` flags closures built
// on data-adaptive fits, where resampling has no guarantee; the result then
// carries a warning.
BootstrapResult bootstrap(const ObservedData& data,
                          const std::function<double(const ObservedData&)>& estimator,
                          int B, std::uint64_t seed, double level = 0.95,
                          int threads = 1, bool adaptive_learners = false);

struct PooledEstimate {
  double point = 0.0;
  double within = 0.0;   // mean of the per-imputation variances
  double between = 0.0;  // variance of the per-imputation points
  double total = 0.0;    // within + (1 + 1/m) * between
  int m = 0;
};

// Combining rules for estimates computed on multiply imputed inputs.
PooledEstimate rubin_pool(const std::vector<double>& points,
                          const std::vector<double>& variances);

}  // namespace pathmed

#endif
