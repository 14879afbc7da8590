#ifndef PATHMED_EFFECTS_HPP
#define PATHMED_EFFECTS_HPP

#include "pathmed/estimators.hpp"

namespace pathmed {

struct InferenceOptions {
  enum class Kind { eif, bootstrap, none };
  Kind kind = Kind::eif;
  double level = 0.95;
  int folds = 0;  // 0: no cross-fitting
  int bootstrap_reps = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct EffectEstimate {
  EffectSpec spec;
  std::string path_label;  // set by decompositions
  double point = 0.0;
  Vector per_unit;  // centered contribution difference (comparison - baseline)
  double se = std::numeric_limits<double>::quiet_NaN();
  double ci_lo = std::numeric_limits<double>::quiet_NaN();
  double ci_hi = std::numeric_limits<double>::quiet_NaN();
  double level = 0.95;
  Method method = Method::eif2;
  std::vector<Warning> warnings;
  Index clipped = 0;
};

// Contrast of the two regimes in `spec`, sharing nuisance fits between
// regimes wherever they agree. Standard errors come from the per-unit
// contribution differences, so terms shared by both regimes cancel.
EffectEstimate estimate_effect(const ObservedData& data, const EffectSpec& spec,
                               Method method, const LearnerPolicy& policy,
                               const GmfOptions& opts,
                               const InferenceOptions& inf,
                               NuisanceCache* cache = nullptr);

struct Decomposition {
  EffectEstimate ate;  // or the raw group gap for disparity decompositions
  std::vector<EffectEstimate> components;
};

// Total-effect decomposition along the regime ladder: flip_order lists the
// coordinates 1..K+1 in the order they switch from 0 to 1 (default: K+1
// first, then K, ..., 1). Components telescope to the total exactly.
Decomposition decompose_ate(const ObservedData& data, Method method,
                            const LearnerPolicy& policy, const GmfOptions& opts,
                            const InferenceOptions& inf,
                            std::vector<int> flip_order = {},
                            NuisanceCache* cache = nullptr);

// Between-group decomposition: no covariates, group share for the treatment
// probability, per-level outcome means fit separately (non-iteratively), and
// raw group means at the endpoints, so components sum to the raw gap.
Decomposition disparity_decompose(const ObservedData& grouped,
                                  const LearnerPolicy& policy,
                                  const GmfOptions& opts,
                                  const InferenceOptions& inf);

}  // namespace pathmed

#endif
