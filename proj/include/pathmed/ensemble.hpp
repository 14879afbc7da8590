#ifndef PATHMED_ENSEMBLE_HPP
#define PATHMED_ENSEMBLE_HPP

#include "pathmed/folds.hpp"
#include "pathmed/glm.hpp"

namespace pathmed {

struct BoostOptions {
  int rounds = 200;
  double learning_rate = 0.1;
  double holdout = 0.2;   // fraction held out for early stopping
  int patience = 20;
  std::uint64_t seed = 1;
};

// Gradient-boosted depth-1 trees on the design features (squared-error loss
// for identity, Bernoulli deviance for logit). Early stopping keeps the
// round with the best holdout loss.
FittedModel fit_boost(const ObservedData& data, const std::vector<Index>& rows,
                      const Vector& response, const DesignSpec& spec,
                      const BoostOptions& opts);

enum class LearnerKind { glm, glm2, boost, stack, saturated };

LearnerKind learner_kind_from_string(const std::string& s);
std::string learner_kind_name(LearnerKind k);

struct LearnerOptions {
  double ridge = 1e-6;
  BoostOptions boost;
  int stack_folds = 5;
  std::uint64_t seed = 1;
};

FittedModel fit_learner(LearnerKind kind, const ObservedData& data,
                        const std::vector<Index>& rows, const Vector& response,
                        const DesignSpec& spec, const LearnerOptions& opts);

struct StackReport {
  Vector weights;
  Vector candidate_cv_loss;
  double ensemble_cv_loss = 0.0;
};

// Convex-weighted ensemble; weights minimize the cross-validated loss
// (squared error for identity, negative log-likelihood for logit) over a
// simplex grid of resolution 0.05.
FittedModel stack_learners(const std::vector<LearnerKind>& candidates,
                           const ObservedData& data,
                           const std::vector<Index>& rows, const Vector& response,
                           const DesignSpec& spec, const FoldPlan& folds,
                           const LearnerOptions& opts,
                           StackReport* report = nullptr);

}  // namespace pathmed

#endif
