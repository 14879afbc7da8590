#ifndef PATHMED_SIMULATION_HPP
#define PATHMED_SIMULATION_HPP

#include "pathmed/effects.hpp"

namespace pathmed {

// Coefficients of the synthetic generating process: four latent normals,
// four covariates, a logistic treatment, two Gaussian mediators, and a
// Gaussian outcome that shares an unobserved input with the covariates.
struct DgpCoefficients {
  Matrix beta_x;    // 4 x 4: row j gives the latent loadings of x_j
  Vector beta_a;    // 5: (1, x1..x4)
  Vector beta_m1;   // 6: (1, x1..x4, a)
  Vector beta_m2;   // 7: (1, x1..x4, a, m1)
  Vector beta_y;    // 9: (1, u_xy, x1..x4, a, m1, m2)

  static DgpCoefficients defaults();
};

ObservedData generate(const DgpCoefficients& coeffs, Index n, std::uint64_t seed);

// (x1, e^{x2/2}, cbrt(x3/x1), x4/(e^{x1/2}+1)); rows with x1 = 0 map the
// third column to 0 and bump *singular_rows. Sign-preserving cube root.
Matrix false_covariates(const Matrix& x, Index* singular_rows = nullptr);

// Returns a copy whose covariate block is [x | z]; columns 0..3 are the
// generating covariates, 4..7 the transformed ones.
ObservedData attach_false_covariates(const ObservedData& data,
                                     Index* singular_rows = nullptr);

// Brute-force mean potential outcome under the regime: simulates the nested
// counterfactual draws and averages. Pair with closed_form_theta as a check.
double oracle_truth(const DgpCoefficients& coeffs, const Regime& regime,
                    Index draws, std::uint64_t seed);

// Linear-path value of the same mean potential outcome.
double closed_form_theta(const DgpCoefficients& coeffs, const Regime& regime);

// Closed-form nuisance functions implied by the generating process,
// packaged as models over a dataset laid out like generate()'s output.
struct TrueNuisances {
  FittedModel pi0;              // logistic in (1, x)
  FittedModel pi1;              // logistic in (1, x, m1)
  FittedModel pi2;              // logistic in (1, x, m1, m2)
  Vector outcome_coefs;         // E[y | x, a, m1, m2] over (1, x, m1, m2, a)
};
TrueNuisances true_nuisances(const DgpCoefficients& coeffs);

// Slope of the estimate along a nuisance perturbation path, with the Monte
// Carlo standard error of that slope. The perturbation shifts the top-level
// outcome regression by eps * cos(freq * m2) and propagates the shift through
// the exact conditional expectations, so both the estimating-equation and
// plain-imputation estimators see the same direction.
struct SlopeCheck {
  double slope = 0.0;
  double slope_se = 0.0;
  double estimate_se = 0.0;
};
SlopeCheck perturbation_slope(const ObservedData& data,
                              const DgpCoefficients& coeffs,
                              const Regime& regime, Method method,
                              const std::vector<double>& eps_grid,
                              double freq = 0.4);

// ---------------------------------------------------------------------------
// replication study: estimator robustness across misspecification patterns
// ---------------------------------------------------------------------------

// Which of the six nuisance roles get the generating covariates; the rest
// are fit on the transformed covariates.
enum class SpecCase { a, b, c, d, e };
std::string spec_case_name(SpecCase c);
std::vector<std::string> true_roles(SpecCase c);

// Parametric policy for one case: glm fits on x columns for the true roles,
// on z columns otherwise.
LearnerPolicy case_policy(const ObservedData& data, SpecCase c);

// Stacked-ensemble policy on the transformed covariates only.
LearnerPolicy superlearner_policy(const ObservedData& data);

struct StudyEstimator {
  std::string name;       // "w-a", "ri", "ri-w-w", "ri-ri-w", "eif2",
                          // "eif2-wglm", "np-eif2", "np-eif2-cf", "tmle",
                          // "tmle-cf"
  Method method = Method::eif2;
  std::vector<HybridChoice> hybrid;
  bool parametric = true;  // follows the case map; otherwise superlearner
  int folds = 0;           // cross-fitting folds, 0 = none
};
StudyEstimator study_estimator(const std::string& name);

struct StudyGrid {
  std::vector<SpecCase> cases{SpecCase::a, SpecCase::b, SpecCase::c,
                              SpecCase::d, SpecCase::e};
  std::vector<StudyEstimator> estimators;
  int reps = 200;
  Index n = 2000;
  std::uint64_t seed = 20240901;
  double clip = 0.01;
  double level = 0.95;
  int threads = 1;
};

struct StudyRow {
  std::string spec_case;  // "a".."e", or "-" for superlearner estimators
  std::string estimator;
  int replicate = 0;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  double ci_lo = std::numeric_limits<double>::quiet_NaN();
  double ci_hi = std::numeric_limits<double>::quiet_NaN();
  int covered = -1;  // -1: no interval
  int failed = 0;
};

struct StudySummary {
  std::string spec_case;
  std::string estimator;
  int reps = 0;
  double truth = 0.0;
  double mean_bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  double coverage = std::numeric_limits<double>::quiet_NaN();
  double fail_rate = 0.0;
};

struct StudyReport {
  double truth = 0.0;
  std::vector<StudyRow> rows;
  std::vector<StudySummary> summaries;
};

// Replicates the estimation of the second mediator's cumulative effect
// (regimes (0,1,1) vs (0,0,1)) under each case/estimator combination.
StudyReport run_study(const StudyGrid& grid);

void write_study_csv(const StudyReport& report, const std::string& path);
std::string study_summary_json(const StudyReport& report);

}  // namespace pathmed

#endif
