#ifndef PATHMED_ESTIMATORS_HPP
#define PATHMED_ESTIMATORS_HPP

#include "pathmed/nuisance.hpp"

namespace pathmed {

enum class Method {
  plugin,     // density plug-in, exact sum or Monte Carlo
  ri,         // iterated regression imputation
  w_m,        // weighting with mediator density ratios
  w_a,        // weighting with treatment odds
  hybrid,     // mixed imputation/weighting, one choice per level
  eif1,       // influence-function estimating equation, density form
  eif2,       // influence-function estimating equation, odds form
  eif2_wglm,  // eif2 with score-matched weighted outcome refits
  tmle        // targeted one-parameter fluctuation of the imputation chain
};

Method method_from_string(const std::string& s);
std::string method_name(Method m);
bool method_is_eif(Method m);

enum class HybridChoice { RI, W };

struct GmfOptions {
  double clip = 0.01;
  int mc_draws = 200;  // Monte Carlo paths per unit for density integrals
  std::uint64_t seed = 1;
  // hybrid: choices listed from the outcome level down to the covariate
  // level, e.g. {RI, RI, W} for K = 2
  std::vector<HybridChoice> hybrid_choices;
  bool hybrid_density = false;  // realize ratio weights with density models
  bool tmle_identity_link = false;
  bool density_methods_saturated = false;  // exact tables for discrete blocks
};

std::vector<HybridChoice> hybrid_choices_from_string(const std::string& s);

struct GmfEstimate {
  double theta = 0.0;
  Vector per_unit;  // influence-function methods: centered phi-hat values;
                    // averaging methods: the per-unit summand
  Vector summand_values;  // uncentered per-unit values; mean(.) == theta
  bool eif_centered = false;
  Method method = Method::eif2;
  Regime regime;
  std::vector<double> score_residual_means;  // weighted/targeted diagnostics
  std::vector<Warning> warnings;
  Index clipped = 0;

  const Vector& summands() const { return summand_values; }
  Vector centered() const;  // per-unit values with mean zero
};

// Fits whatever the method needs on fit_rows and evaluates the per-unit
// contributions on eval_rows. Shared fits are deduplicated through `cache`.
GmfEstimate estimate_gmf(const ObservedData& data, const Regime& regime,
                         Method method, const LearnerPolicy& policy,
                         const GmfOptions& opts, NuisanceCache* cache,
                         const std::vector<Index>& fit_rows,
                         const std::vector<Index>& eval_rows);

GmfEstimate estimate_gmf(const ObservedData& data, const Regime& regime,
                         Method method, const LearnerPolicy& policy,
                         const GmfOptions& opts, NuisanceCache* cache = nullptr);

// Direct entry points over a prepared NuisanceSet.
GmfEstimate plugin_mle(const ObservedData& data, const Regime& regime,
                       const NuisanceSet& nuis, const GmfOptions& opts);
GmfEstimate regression_impute(const ObservedData& data, const Regime& regime,
                              const NuisanceSet& nuis, const GmfOptions& opts);
GmfEstimate weighting_m(const ObservedData& data, const Regime& regime,
                        const NuisanceSet& nuis, const GmfOptions& opts);
GmfEstimate weighting_a(const ObservedData& data, const Regime& regime,
                        const NuisanceSet& nuis, const GmfOptions& opts);
GmfEstimate eif1(const ObservedData& data, const Regime& regime,
                 const NuisanceSet& nuis, const GmfOptions& opts);
GmfEstimate eif2(const ObservedData& data, const Regime& regime,
                 const NuisanceSet& nuis, const GmfOptions& opts);

// Fold-wise estimation: nuisances learned on the complement of each fold,
// contributions evaluated on the fold, estimates averaged with fold-size
// weights (exactly the pooled per-unit mean).
GmfEstimate cross_fit(const ObservedData& data, const Regime& regime,
                      Method method, const LearnerPolicy& policy, int J,
                      std::uint64_t seed, const GmfOptions& opts);

// Same fold plan across several regimes, sharing nuisance fits within folds.
std::vector<GmfEstimate> cross_fit_many(const ObservedData& data,
                                        const std::vector<Regime>& regimes,
                                        Method method,
                                        const LearnerPolicy& policy, int J,
                                        std::uint64_t seed,
                                        const GmfOptions& opts);

}  // namespace pathmed

#endif
